//! Job descriptors. Every object rejects unknown keys.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use betaconv_core::evt::Factorization;
use betaconv_core::{
    Beta, DistRef64, Extrapolation, Gamma, GridDist, GridFn, GridSpec64, Interpolation, LogNormal, PointMass,
    PowerFamily, PowerKind, ReciprocalWeibull, Uniform,
};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// A named distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Family {
    Gamma {
        shape: f64,
        #[serde(default = "one")]
        rate: f64,
    },
    Uniform {
        #[serde(default)]
        lo: f64,
        #[serde(default = "one")]
        hi: f64,
    },
    PointMass {
        at: f64,
    },
    Beta {
        alpha: f64,
        beta: f64,
    },
    PurePower {
        gamma: f64,
    },
    PowerWithLog {
        gamma: f64,
    },
    Lognormal {
        #[serde(default)]
        mu: f64,
        #[serde(default = "one")]
        sigma: f64,
    },
    /// `1/L` with `L` lognormal(mu, sigma).
    ReciprocalLognormal {
        #[serde(default)]
        mu: f64,
        #[serde(default = "one")]
        sigma: f64,
    },
    ReciprocalWeibull {
        shape: f64,
        #[serde(default = "one")]
        scale: f64,
    },
    /// Tabulated CDF in the `x,y` CSV format.
    Grid {
        path: PathBuf,
    },
}

fn one() -> f64 {
    1.0
}

impl Family {
    /// `base` resolves relative grid paths.
    pub fn build(&self, base: &Path) -> Result<DistRef64, CliError> {
        let d: DistRef64 = match *self {
            Family::Gamma { shape, rate } => Arc::new(Gamma::new(shape, rate)?),
            Family::Uniform { lo, hi } => Arc::new(Uniform::new(lo, hi)?),
            Family::PointMass { at } => Arc::new(PointMass::new(at)?),
            Family::Beta { alpha, beta } => Arc::new(Beta::new(alpha, beta)?),
            Family::PurePower { gamma } => Arc::new(PowerFamily::new(gamma, PowerKind::PurePower)?),
            Family::PowerWithLog { gamma } => Arc::new(PowerFamily::new(gamma, PowerKind::PowerWithLog)?),
            Family::Lognormal { mu, sigma } => Arc::new(LogNormal::new(mu, sigma)?),
            Family::ReciprocalLognormal { mu, sigma } => Arc::new(LogNormal::new(-mu, sigma)?),
            Family::ReciprocalWeibull { shape, scale } => Arc::new(ReciprocalWeibull::new(shape, scale)?),
            Family::Grid { ref path } => {
                let p = resolve(base, path);
                let cdf = GridFn::load_csv(&p, Interpolation::MonotoneCubic, Extrapolation::CDF)?;
                Arc::new(GridDist::new(cdf, None, p.display().to_string())?)
            }
        };
        Ok(d)
    }

    /// Parses `--family`: inline JSON, or `name[:key=value,...]`.
    pub fn parse_flag(s: &str) -> Result<Self, CliError> {
        let s = s.trim();
        if s.starts_with('{') {
            return serde_json::from_str(s).map_err(|e| CliError::Usage(format!("--family: {e}")));
        }
        let (name, rest) = s.split_once(':').unwrap_or((s, ""));
        let mut obj = serde_json::Map::new();
        obj.insert("family".into(), serde_json::Value::String(name.trim().into()));
        for kv in rest.split(',').filter(|p| !p.trim().is_empty()) {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("--family: expected key=value, got `{kv}`")))?;
            let v: f64 = v
                .trim()
                .parse()
                .map_err(|_| CliError::Usage(format!("--family: `{v}` is not a number")))?;
            obj.insert(k.trim().into(), serde_json::json!(v));
        }
        serde_json::from_value(serde_json::Value::Object(obj)).map_err(|e| CliError::Usage(format!("--family: {e}")))
    }
}

pub fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Op {
    Forward,
    Recover,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransformConfig {
    #[serde(default)]
    pub op: Option<Op>,
    pub alpha: f64,
    pub beta: f64,
    #[serde(default)]
    pub base: Option<Family>,
    /// CDF of the base law as an `x,y` CSV.
    #[serde(default)]
    pub input: Option<PathBuf>,
    #[serde(default)]
    pub grid: Option<GridSpec64>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RecoverMethod {
    #[default]
    Iterative,
    Derivative,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecoverConfig {
    #[serde(default)]
    pub op: Option<Op>,
    pub alpha: f64,
    pub beta: f64,
    /// Descending `β, …, 0`; the equal-step default when absent.
    #[serde(default)]
    pub schedule: Option<Vec<f64>>,
    #[serde(default)]
    pub method: RecoverMethod,
    /// Scaled CDF (iterative) or scaled density (derivative) as `x,y` CSV.
    #[serde(default)]
    pub input: Option<PathBuf>,
    /// Base law to scale first; the recovered CDF is compared against it.
    #[serde(default)]
    pub base: Option<Family>,
    #[serde(default)]
    pub grid: Option<GridSpec64>,
    /// Right end of the support when `input` is a bounded law.
    #[serde(default)]
    pub upper: Option<f64>,
    /// Derivative route: `β = n − δ`.
    #[serde(default)]
    pub n: Option<usize>,
    #[serde(default)]
    pub delta: Option<f64>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scaling {
    pub alpha: f64,
    pub beta: f64,
}

/// Draw `n` samples of `dist`, times an independent `B(α, β)` when `scaling`
/// is set.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleSource {
    pub dist: Family,
    pub n: usize,
    #[serde(default)]
    pub scaling: Option<Scaling>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TailConfig {
    /// Samples, one per line (optional header).
    #[serde(default)]
    pub input: Option<PathBuf>,
    /// Analytic CDF.
    #[serde(default)]
    pub family: Option<Family>,
    #[serde(default)]
    pub sample: Option<SampleSource>,
    #[serde(default)]
    pub window: Option<[f64; 2]>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    EllipticalMinima,
    PolarMinima,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub experiment: Experiment,
    /// Dimension of the elliptical vector.
    #[serde(default = "two")]
    pub k: usize,
    pub rho: f64,
    /// Full correlation matrix (rows); equicorrelation `rho` when absent.
    #[serde(default)]
    pub correlation: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub factorization: Factorization,
    pub radial: Family,
    #[serde(default)]
    pub angular: Option<Family>,
    /// Probability of `T₁ = +1` and `T₂ = +1`.
    #[serde(default = "half")]
    pub q1: f64,
    #[serde(default = "half")]
    pub q2: f64,
    pub n: usize,
    pub reps: usize,
    /// Index of the radial law at 0 when the family does not know it.
    #[serde(default)]
    pub gamma: Option<f64>,
    #[serde(default)]
    pub allow_large_gamma: bool,
    /// Also write `minima.csv` (`rep,coord,value`).
    #[serde(default)]
    pub dump_minima: bool,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

fn two() -> usize {
    2
}

fn half() -> f64 {
    0.5
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    #[serde(default)]
    pub only: Vec<String>,
    #[serde(default)]
    pub tol: Option<f64>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

/// Reads and parses a JSON config; errors name the file and position.
pub fn load<C: DeserializeOwned>(path: &Path) -> Result<C, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("{}:{}:{}: {e}", path.display(), e.line(), e.column())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn family_flag_forms() {
        assert_eq!(
            Family::parse_flag("gamma:shape=2,rate=1").unwrap(),
            Family::Gamma { shape: 2.0, rate: 1.0 }
        );
        assert_eq!(
            Family::parse_flag("uniform").unwrap(),
            Family::Uniform { lo: 0.0, hi: 1.0 }
        );
        assert_eq!(
            Family::parse_flag(r#"{"family":"pure-power","gamma":0.5}"#).unwrap(),
            Family::PurePower { gamma: 0.5 }
        );
        assert!(Family::parse_flag("gamma:shape=2,colour=1").is_err());
        assert!(Family::parse_flag("nope").is_err());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let bad = r#"{"alpha": 1, "beta": 1, "base": {"family": "uniform"}, "aplha": 2}"#;
        assert!(serde_json::from_str::<TransformConfig>(bad).is_err());
        let nested = r#"{"alpha": 1, "beta": 1, "base": {"family": "gamma", "shape": 2, "scale": 1}}"#;
        assert!(serde_json::from_str::<TransformConfig>(nested).is_err());
        let ok = r#"{"op": "forward", "alpha": 1, "beta": 1, "base": {"family": "gamma", "shape": 2}}"#;
        let c: TransformConfig = serde_json::from_str(ok).unwrap();
        assert_eq!(c.base, Some(Family::Gamma { shape: 2.0, rate: 1.0 }));
    }
}
