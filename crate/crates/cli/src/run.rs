//! The five commands. Each returns the JSON document it wrote (or would
//! print) so `main` can echo it.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use betaconv_core::evt::{
    minima_experiment, polar_minima_experiment, EllipticalSpec, MinimaOptions, MinimaReport, PolarSpec,
};
use betaconv_core::sample::par_draws;
use betaconv_core::scaling::{
    default_grid, forward, forward_cdf, forward_pdf, recover_derivative_grid, recover_iterative_bounded,
};
use betaconv_core::scaling::{RecoverySchedule, FORWARD_CONSISTENCY_TOL};
use betaconv_core::tail::{rv_index_at_zero, QuantileWindow, TailReport, TailSource};
use betaconv_core::verify::{run_identity_suite, VerifyOptions, VerifyReport};
use betaconv_core::{
    Beta, BetaParams64, DistRef64, Error, Extrapolation, Gamma, GridFn, GridFn64, GridSpec64, Interpolation,
    ProductDist, ScalarDist,
};
use nalgebra::DMatrix;
use rand::RngCore;
use serde::Serialize;
use serde_json::Value;

use crate::config::{
    load, resolve, Experiment, Family, Op, RecoverConfig, RecoverMethod, SimulateConfig, TailConfig, TransformConfig,
    VerifyConfig,
};
use crate::CliError;

/// Command-line overrides shared by every command.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

/// A finished job: the document to print, and whether it counts as a
/// verification failure.
pub struct Outcome {
    pub document: Value,
    pub verification_failed: bool,
}

impl Outcome {
    fn ok<S: Serialize>(doc: &S) -> Result<Self, CliError> {
        Ok(Self {
            document: to_value(doc)?,
            verification_failed: false,
        })
    }
}

fn to_value<S: Serialize>(doc: &S) -> Result<Value, CliError> {
    serde_json::to_value(doc).map_err(|e| CliError::Usage(format!("cannot serialize report: {e}")))
}

fn config_dir(path: &Path) -> PathBuf {
    path.parent().map(Path::to_path_buf).unwrap_or_default()
}

fn out_dir(cli: &Overrides, cfg: &Option<PathBuf>, base: &Path) -> Result<PathBuf, CliError> {
    let dir = match (&cli.out, cfg) {
        (Some(d), _) => d.clone(),
        (None, Some(d)) => resolve(base, d),
        (None, None) => PathBuf::from("."),
    };
    fs::create_dir_all(&dir).map_err(|e| CliError::Io {
        path: dir.clone(),
        message: e.to_string(),
    })?;
    Ok(dir)
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

fn write_json<S: Serialize>(path: &Path, doc: &S) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(doc).map_err(|e| CliError::Usage(e.to_string()))?;
    text.push('\n');
    write_text(path, &text)
}

fn save_grid(dir: &Path, name: &str, g: &GridFn64) -> Result<String, CliError> {
    g.save_csv(&dir.join(name))?;
    Ok(name.to_string())
}

/// Exactly one of a named family or a CSV path must describe the base law.
fn base_law(family: &Option<Family>, input: &Option<PathBuf>, dir: &Path) -> Result<DistRef64, CliError> {
    match (family, input) {
        (Some(f), None) => f.build(dir),
        (None, Some(p)) => Family::Grid { path: p.clone() }.build(dir),
        (Some(_), Some(_)) => Err(CliError::Usage("give either `base` or `input`, not both".into())),
        (None, None) => Err(CliError::Usage("missing base law: set `base` or `input`".into())),
    }
}

fn grid_for(
    spec: &Option<GridSpec64>,
    dist: &dyn ScalarDist<f64>,
    params: BetaParams64,
) -> Result<GridSpec64, CliError> {
    let g = match spec {
        Some(g) => *g,
        None => default_grid(dist, params, GridSpec64::DEFAULT_POINTS)?,
    };
    g.validate()?;
    Ok(g)
}

/// Sup distance at the grid nodes.
fn sup_at_nodes(g: &GridFn64, f: impl Fn(f64) -> f64) -> f64 {
    g.xs()
        .iter()
        .zip(g.ys())
        .map(|(&x, &y)| (y - f(x)).abs())
        .fold(0.0, f64::max)
}

#[derive(Serialize)]
struct Residual {
    residual: f64,
    tolerance: f64,
}

#[derive(Serialize)]
struct ReferenceCheck {
    law: String,
    sup_error: f64,
    tolerance: f64,
    passed: bool,
}

#[derive(Serialize)]
struct TransformMeta {
    command: &'static str,
    base: String,
    alpha: f64,
    beta: f64,
    seed: u64,
    grid: GridSpec64,
    /// Weyl route against mixture route, sup over the grid.
    consistency: Residual,
    /// Simpson integral of the density against CDF increments.
    pdf_integral_residual: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    gamma_identity: Option<ReferenceCheck>,
    files: Vec<String>,
}

pub fn transform(path: &Path, cli: &Overrides) -> Result<Outcome, CliError> {
    let cfg: TransformConfig = load(path)?;
    if cfg.op == Some(Op::Recover) {
        return Err(CliError::Usage("op `recover` belongs to the `recover` command".into()));
    }
    let params = BetaParams64::new(cfg.alpha, cfg.beta)?;
    let dir = config_dir(path);
    let dist = base_law(&cfg.base, &cfg.input, &dir)?;
    let grid = grid_for(&cfg.grid, dist.as_ref(), params)?;
    let pair = forward(dist.as_ref(), params, &grid)?;
    let out = out_dir(cli, &cfg.output_dir, &dir)?;
    let files = vec![
        save_grid(&out, "scaled_cdf.csv", &pair.scaled_cdf)?,
        save_grid(&out, "scaled_pdf.csv", &pair.scaled_pdf)?,
        "meta.json".to_string(),
    ];
    // Gamma(α+β, λ) scaled by B(α, β) is Gamma(α, λ)
    let gamma_identity = match cfg.base {
        Some(Family::Gamma { shape, rate }) if (shape - cfg.alpha - cfg.beta).abs() <= 1e-12 * shape => {
            let reference = Gamma::new(cfg.alpha, rate)?;
            let sup_error = sup_at_nodes(&pair.scaled_cdf, |x| reference.cdf(x));
            Some(ReferenceCheck {
                law: reference.name(),
                sup_error,
                tolerance: 1e-6,
                passed: sup_error <= 1e-6,
            })
        }
        _ => None,
    };
    let meta = TransformMeta {
        command: "transform",
        base: pair.base.clone(),
        alpha: cfg.alpha,
        beta: cfg.beta,
        seed: cli.seed.or(cfg.seed).unwrap_or(0),
        grid,
        consistency: Residual {
            residual: pair.residual,
            tolerance: FORWARD_CONSISTENCY_TOL,
        },
        pdf_integral_residual: pair.pdf_residual,
        gamma_identity,
        files,
    };
    write_json(&out.join("meta.json"), &meta)?;
    Outcome::ok(&meta)
}

#[derive(Serialize)]
struct RecoverMeta {
    command: &'static str,
    method: RecoverMethod,
    source: String,
    alpha: f64,
    beta: f64,
    seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    schedule: Option<Vec<f64>>,
    points: usize,
    /// Sup distance to the base law when the job started from one.
    #[serde(skip_serializing_if = "Option::is_none")]
    reference_sup_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    recovered_mass: Option<f64>,
    files: Vec<String>,
}

pub fn recover(path: &Path, cli: &Overrides) -> Result<Outcome, CliError> {
    let cfg: RecoverConfig = load(path)?;
    if cfg.op == Some(Op::Forward) {
        return Err(CliError::Usage(
            "op `forward` belongs to the `transform` command".into(),
        ));
    }
    let params = BetaParams64::new(cfg.alpha, cfg.beta)?;
    let dir = config_dir(path);
    let base = match (&cfg.base, &cfg.input) {
        (Some(f), None) => Some(f.build(&dir)?),
        (None, Some(_)) => None,
        (Some(_), Some(_)) => return Err(CliError::Usage("give either `base` or `input`, not both".into())),
        (None, None) => return Err(CliError::Usage("missing scaled law: set `input` or `base`".into())),
    };
    let seed = cli.seed.or(cfg.seed).unwrap_or(0);
    match cfg.method {
        RecoverMethod::Iterative => {
            if cfg.n.is_some() || cfg.delta.is_some() {
                return Err(CliError::Usage(
                    "`n` and `delta` apply to the derivative method only".into(),
                ));
            }
            let schedule = match &cfg.schedule {
                Some(b) => RecoverySchedule::new(b.clone())?,
                None => RecoverySchedule::default_for(cfg.beta)?,
            };
            let (scaled, source, upper) = match &base {
                Some(d) => {
                    let grid = grid_for(&cfg.grid, d.as_ref(), params)?;
                    (forward_cdf(d.as_ref(), params, &grid)?.cdf, d.name(), d.upper())
                }
                None => {
                    let p = resolve(&dir, cfg.input.as_ref().expect("checked"));
                    let g = GridFn::load_csv(&p, Interpolation::MonotoneCubic, Extrapolation::CDF)?;
                    (g, p.display().to_string(), cfg.upper.unwrap_or(f64::INFINITY))
                }
            };
            if cfg.upper.is_some() && base.is_some() {
                return Err(CliError::Usage("`upper` applies to a tabulated `input` only".into()));
            }
            let h = recover_iterative_bounded(&scaled, params, &schedule, upper)?;
            let out = out_dir(cli, &cfg.output_dir, &dir)?;
            let files = vec![save_grid(&out, "recovered_cdf.csv", &h)?, "meta.json".to_string()];
            let meta = RecoverMeta {
                command: "recover",
                method: cfg.method,
                source,
                alpha: cfg.alpha,
                beta: cfg.beta,
                seed,
                schedule: Some(schedule.betas().to_vec()),
                points: h.len(),
                reference_sup_error: base.as_ref().map(|d| sup_at_nodes(&h, |x| d.cdf(x))),
                recovered_mass: None,
                files,
            };
            write_json(&out.join("meta.json"), &meta)?;
            Outcome::ok(&meta)
        }
        RecoverMethod::Derivative => {
            let n = cfg
                .n
                .ok_or_else(|| CliError::Usage("derivative method needs `n`".into()))?;
            let delta = cfg.delta.unwrap_or(0.0);
            if cfg.schedule.is_some() {
                return Err(CliError::Usage(
                    "`schedule` applies to the iterative method only".into(),
                ));
            }
            let (scaled_pdf, source) = match &base {
                Some(d) => {
                    let grid = grid_for(&cfg.grid, d.as_ref(), params)?;
                    (forward_pdf(d.as_ref(), params, &grid)?, d.name())
                }
                None => {
                    let p = resolve(&dir, cfg.input.as_ref().expect("checked"));
                    let g = GridFn::load_csv(&p, Interpolation::Linear, Extrapolation::DENSITY)?;
                    (g, p.display().to_string())
                }
            };
            let h = recover_derivative_grid(&scaled_pdf, params, n, delta)?;
            let out = out_dir(cli, &cfg.output_dir, &dir)?;
            let files = vec![save_grid(&out, "recovered_pdf.csv", &h)?, "meta.json".to_string()];
            let meta = RecoverMeta {
                command: "recover",
                method: cfg.method,
                source,
                alpha: cfg.alpha,
                beta: cfg.beta,
                seed,
                schedule: None,
                points: h.len(),
                reference_sup_error: None,
                recovered_mass: Some(h.integral(h.x_min(), h.x_max())),
                files,
            };
            write_json(&out.join("meta.json"), &meta)?;
            Outcome::ok(&meta)
        }
    }
}

/// Tail-index flags that override the config.
#[derive(Debug, Clone, Default)]
pub struct TailFlags {
    pub input: Option<PathBuf>,
    pub family: Option<Family>,
    pub window: Option<[f64; 2]>,
}

#[derive(Serialize)]
struct TailResults {
    command: &'static str,
    source: String,
    seed: u64,
    #[serde(flatten)]
    report: TailReport,
}

/// One value per line (first comma-separated field); a non-numeric first
/// line is taken as a header.
fn read_samples(path: &Path) -> Result<Vec<f64>, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let field = line.split(',').next().unwrap_or("").trim();
        if field.is_empty() {
            continue;
        }
        match field.parse::<f64>() {
            Ok(v) => out.push(v),
            Err(_) if i == 0 => continue,
            Err(_) => {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line: i as u64 + 1,
                    message: format!("cannot parse sample value `{field}`"),
                }
                .into())
            }
        }
    }
    Ok(out)
}

pub fn tail_index(path: Option<&Path>, flags: &TailFlags, cli: &Overrides) -> Result<Outcome, CliError> {
    let cfg: TailConfig = match path {
        Some(p) => load(p)?,
        None => TailConfig::default(),
    };
    let dir = path.map(config_dir).unwrap_or_default();
    let [lo, hi] = flags.window.or(cfg.window).unwrap_or([1e-4, 1e-2]);
    let window = QuantileWindow::new(lo, hi)?;
    let seed = cli.seed.or(cfg.seed).unwrap_or(0);
    // flags replace the config's source
    let (input, family, sample) = if flags.input.is_some() || flags.family.is_some() {
        (flags.input.clone(), flags.family.clone(), None)
    } else {
        (cfg.input.map(|p| resolve(&dir, &p)), cfg.family, cfg.sample)
    };
    let sources = input.is_some() as u8 + family.is_some() as u8 + sample.is_some() as u8;
    if sources != 1 {
        return Err(CliError::Usage(
            "give exactly one of `input`, `family` or `sample`".into(),
        ));
    }
    let (report, source) = if let Some(p) = input {
        let xs = read_samples(&p)?;
        (
            rv_index_at_zero(TailSource::Samples(&xs), window)?,
            p.display().to_string(),
        )
    } else if let Some(f) = family {
        let d = f.build(&dir)?;
        (rv_index_at_zero(TailSource::Dist(d.as_ref()), window)?, d.name())
    } else {
        let s = sample.expect("one source");
        let d = s.dist.build(&dir)?;
        let law: DistRef64 = match s.scaling {
            Some(sc) => Arc::new(ProductDist::new(d, Arc::new(Beta::new(sc.alpha, sc.beta)?))?),
            None => d,
        };
        let xs = par_draws(s.n, seed, |rng: &mut dyn RngCore| law.sample(rng));
        (
            rv_index_at_zero(TailSource::Samples(&xs), window)?,
            format!("{} samples of {}", s.n, law.name()),
        )
    };
    let results = TailResults {
        command: "tail-index",
        source,
        seed,
        report,
    };
    if cli.out.is_some() || cfg.output_dir.is_some() {
        let out = out_dir(cli, &cfg.output_dir, &dir)?;
        write_json(&out.join("results.json"), &results)?;
    }
    Outcome::ok(&results)
}

#[derive(Serialize)]
struct SimulateResults {
    command: &'static str,
    experiment: Experiment,
    seed: u64,
    rho: f64,
    k: usize,
    radial: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    angular: Option<String>,
    #[serde(flatten)]
    report: MinimaReport,
    files: Vec<String>,
}

fn correlation_matrix(cfg: &SimulateConfig) -> Result<DMatrix<f64>, CliError> {
    match &cfg.correlation {
        Some(rows) => {
            let k = rows.len();
            if rows.iter().any(|r| r.len() != k) {
                return Err(CliError::Usage("`correlation` must be a square matrix".into()));
            }
            if k != cfg.k {
                return Err(CliError::Usage(format!("`correlation` is {k}x{k} but k = {}", cfg.k)));
            }
            Ok(DMatrix::from_fn(k, k, |i, j| rows[i][j]))
        }
        None => Ok(DMatrix::from_fn(
            cfg.k,
            cfg.k,
            |i, j| if i == j { 1.0 } else { cfg.rho },
        )),
    }
}

fn minima_csv(minima: &[Vec<f64>]) -> String {
    let mut s = String::from("rep,coord,value\n");
    for (r, row) in minima.iter().enumerate() {
        for (c, v) in row.iter().enumerate() {
            s.push_str(&format!("{r},{c},{v:.16e}\n"));
        }
    }
    s
}

pub fn simulate(path: &Path, cli: &Overrides) -> Result<Outcome, CliError> {
    let cfg: SimulateConfig = load(path)?;
    let dir = config_dir(path);
    let seed = cli.seed.or(cfg.seed).unwrap_or(0);
    let radial = cfg.radial.build(&dir)?;
    let opts = MinimaOptions {
        gamma: cfg.gamma,
        allow_large_gamma: cfg.allow_large_gamma,
        keep_minima: cfg.dump_minima,
    };
    let (report, angular) = match cfg.experiment {
        Experiment::EllipticalMinima => {
            if cfg.angular.is_some() {
                return Err(CliError::Usage("`angular` applies to polar-minima only".into()));
            }
            let spec = EllipticalSpec::new(correlation_matrix(&cfg)?, radial.clone(), cfg.factorization)?;
            (minima_experiment(&spec, cfg.n, cfg.reps, seed, &opts)?, None)
        }
        Experiment::PolarMinima => {
            if cfg.k != 2 || cfg.correlation.is_some() {
                return Err(CliError::Usage(
                    "polar-minima is bivariate: k = 2 and no `correlation`".into(),
                ));
            }
            let angular = cfg
                .angular
                .as_ref()
                .ok_or_else(|| CliError::Usage("polar-minima needs `angular`".into()))?
                .build(&dir)?;
            let spec = PolarSpec::new(cfg.rho, cfg.q1, cfg.q2, radial.clone(), angular.clone())?;
            (
                polar_minima_experiment(&spec, cfg.n, cfg.reps, seed, &opts)?,
                Some(angular.name()),
            )
        }
    };
    let out = out_dir(cli, &cfg.output_dir, &dir)?;
    let mut files = vec!["results.json".to_string()];
    if let Some(m) = &report.minima {
        write_text(&out.join("minima.csv"), &minima_csv(m))?;
        files.push("minima.csv".into());
    }
    let results = SimulateResults {
        command: "simulate",
        experiment: cfg.experiment,
        seed,
        rho: cfg.rho,
        k: cfg.k,
        radial: radial.name(),
        angular,
        report,
        files,
    };
    write_json(&out.join("results.json"), &results)?;
    Outcome::ok(&results)
}

#[derive(Serialize)]
struct VerifyResults {
    command: &'static str,
    seed: u64,
    #[serde(flatten)]
    report: VerifyReport,
}

pub fn verify(path: Option<&Path>, only: &[String], tol: Option<f64>, cli: &Overrides) -> Result<Outcome, CliError> {
    let cfg: VerifyConfig = match path {
        Some(p) => load(p)?,
        None => VerifyConfig::default(),
    };
    let dir = path.map(config_dir).unwrap_or_default();
    let seed = cli.seed.or(cfg.seed).unwrap_or(0);
    let opts = VerifyOptions {
        only: if only.is_empty() {
            cfg.only.clone()
        } else {
            only.to_vec()
        },
        tol: tol.or(cfg.tol),
        seed,
    };
    let report = run_identity_suite(&opts)?;
    let failed = !report.passed;
    let results = VerifyResults {
        command: "verify",
        seed,
        report,
    };
    if cli.out.is_some() || cfg.output_dir.is_some() {
        let out = out_dir(cli, &cfg.output_dir, &dir)?;
        write_json(&out.join("results.json"), &results)?;
    }
    Ok(Outcome {
        document: to_value(&results)?,
        verification_failed: failed,
    })
}
