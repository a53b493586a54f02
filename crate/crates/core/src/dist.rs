//! Positive scalar distributions: the base laws `H`, beta scalings, and test
//! families with known lower tails.

use std::fmt::Debug;
use std::sync::Arc;

use rand::distr::Open01;
use rand::RngCore;
use rand_distr::Distribution;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GridFn;
use crate::quad::{bracket_root, integrate, Tolerance};
use crate::scalar::Real;
use crate::special::{beta_reg_pair, gamma_reg_pair, ln_beta, ln_gamma, normal_cdf};

/// A distribution on `[lower, upper]` with `0 <= lower`.
///
/// Implementations are immutable; every method is safe to call concurrently.
pub trait ScalarDist<T: Real>: Debug + Send + Sync {
    fn name(&self) -> String;
    fn lower(&self) -> T;
    fn upper(&self) -> T;
    fn cdf(&self, x: T) -> T;

    fn survival(&self, x: T) -> T {
        T::one() - self.cdf(x)
    }

    /// Lebesgue density, `None` if the law has no density.
    fn density(&self, x: T) -> Option<T>;

    fn has_density(&self) -> bool {
        true
    }

    /// Point masses as `(location, mass)`.
    fn atoms(&self) -> Vec<(T, T)> {
        Vec::new()
    }

    /// Generalized inverse `inf{x : F(x) >= p}`, by bracketed root finding.
    fn quantile(&self, p: T) -> T {
        generic_quantile(self, p)
    }

    /// One draw; inversion unless the family has a better sampler.
    fn sample(&self, rng: &mut dyn RngCore) -> T {
        let u: f64 = Open01.sample(rng);
        self.quantile(T::lit(u))
    }

    /// Index of regular variation at the lower endpoint, when known exactly.
    fn lower_tail_index(&self) -> Option<T> {
        None
    }
}

/// Shared handle used wherever a distribution is passed around.
pub type DistRef<T> = Arc<dyn ScalarDist<T>>;

fn generic_quantile<T: Real, D: ScalarDist<T> + ?Sized>(d: &D, p: T) -> T {
    if p.is_nan() {
        return p;
    }
    let lower = d.lower();
    let upper = d.upper();
    if p <= T::zero() {
        return lower;
    }
    if p >= T::one() {
        return upper;
    }
    let half = T::lit(0.5);
    let f = |x: T| {
        if p > half {
            (T::one() - p) - d.survival(x)
        } else {
            d.cdf(x) - p
        }
    };
    let mut hi = if upper.is_finite() {
        upper
    } else {
        let mut h = lower.max(T::one());
        for _ in 0..2000 {
            if f(h) >= T::zero() {
                break;
            }
            h = h * T::lit(4.0);
        }
        h
    };
    let mut lo = lower;
    if lower == T::zero() {
        let mut l = hi.min(T::one());
        while f(l) >= T::zero() && l > T::min_positive_value() {
            hi = l;
            l = l / T::lit(16.0);
        }
        lo = if f(l) < T::zero() { l } else { T::zero() };
    }
    bracket_root(&f, lo, hi, T::epsilon() * T::lit(4.0)).unwrap_or(if f(lo) >= T::zero() { lo } else { hi })
}

fn check_positive<T: Real>(name: &'static str, v: T) -> Result<()> {
    if v > T::zero() && v.is_finite() {
        Ok(())
    } else {
        Err(Error::param(name, v.as_f64(), "must be finite and > 0"))
    }
}

/// Shape parameters of `B_{α,β}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaParams<T> {
    pub alpha: T,
    pub beta: T,
}

impl<T: Real> BetaParams<T> {
    pub fn new(alpha: T, beta: T) -> Result<Self> {
        let p = Self { alpha, beta };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        check_positive("alpha", self.alpha)?;
        check_positive("beta", self.beta)
    }
}

/// Beta law on `(0, 1)`.
#[derive(Debug, Clone, Copy)]
pub struct Beta<T> {
    a: T,
    b: T,
    ln_norm: T,
}

impl<T: Real> Beta<T> {
    pub fn new(a: T, b: T) -> Result<Self> {
        check_positive("alpha", a)?;
        check_positive("beta", b)?;
        Ok(Self {
            a,
            b,
            ln_norm: ln_beta(a, b),
        })
    }

    pub fn from_params(p: BetaParams<T>) -> Result<Self> {
        Self::new(p.alpha, p.beta)
    }

    pub fn alpha(&self) -> T {
        self.a
    }

    pub fn beta(&self) -> T {
        self.b
    }

    /// Log-density on `(0, 1)`.
    pub fn ln_density(&self, x: T) -> T {
        (self.a - T::one()) * x.ln() + (self.b - T::one()) * (-x).ln_1p() - self.ln_norm
    }
}

impl<T: Real> ScalarDist<T> for Beta<T> {
    fn name(&self) -> String {
        format!("beta({}, {})", self.a, self.b)
    }
    fn lower(&self) -> T {
        T::zero()
    }
    fn upper(&self) -> T {
        T::one()
    }
    fn cdf(&self, x: T) -> T {
        if x <= T::zero() {
            T::zero()
        } else if x >= T::one() {
            T::one()
        } else {
            beta_reg_pair(self.a, self.b, x).0
        }
    }
    fn survival(&self, x: T) -> T {
        if x <= T::zero() {
            T::one()
        } else if x >= T::one() {
            T::zero()
        } else {
            beta_reg_pair(self.a, self.b, x).1
        }
    }
    fn density(&self, x: T) -> Option<T> {
        if x <= T::zero() || x >= T::one() {
            // boundary values follow the limit where it is finite
            let at_edge = if x == T::zero() {
                edge_density(self.a, self.ln_norm)
            } else if x == T::one() {
                edge_density(self.b, self.ln_norm)
            } else {
                T::zero()
            };
            return Some(at_edge);
        }
        Some(self.ln_density(x).exp())
    }
    fn sample(&self, rng: &mut dyn RngCore) -> T {
        let ga = rand_distr::Gamma::<f64>::new(self.a.as_f64(), 1.0).expect("validated shape");
        let gb = rand_distr::Gamma::<f64>::new(self.b.as_f64(), 1.0).expect("validated shape");
        let x = ga.sample(rng);
        let y = gb.sample(rng);
        let s = x / (x + y);
        if s.is_nan() {
            // both gammas underflowed; fall back to inversion
            let u: f64 = Open01.sample(rng);
            return self.quantile(T::lit(u));
        }
        T::lit(s)
    }
    fn lower_tail_index(&self) -> Option<T> {
        Some(self.a)
    }
}

fn edge_density<T: Real>(shape: T, ln_norm: T) -> T {
    if shape < T::one() {
        T::infinity()
    } else if shape == T::one() {
        (-ln_norm).exp()
    } else {
        T::zero()
    }
}

/// Gamma law with shape `a` and rate `λ`.
#[derive(Debug, Clone, Copy)]
pub struct Gamma<T> {
    shape: T,
    rate: T,
}

impl<T: Real> Gamma<T> {
    pub fn new(shape: T, rate: T) -> Result<Self> {
        check_positive("shape", shape)?;
        check_positive("rate", rate)?;
        Ok(Self { shape, rate })
    }

    pub fn shape(&self) -> T {
        self.shape
    }

    pub fn rate(&self) -> T {
        self.rate
    }
}

impl<T: Real> ScalarDist<T> for Gamma<T> {
    fn name(&self) -> String {
        format!("gamma({}, {})", self.shape, self.rate)
    }
    fn lower(&self) -> T {
        T::zero()
    }
    fn upper(&self) -> T {
        T::infinity()
    }
    fn cdf(&self, x: T) -> T {
        if x <= T::zero() {
            T::zero()
        } else if x == T::infinity() {
            T::one()
        } else {
            gamma_reg_pair(self.shape, self.rate * x).0
        }
    }
    fn survival(&self, x: T) -> T {
        if x <= T::zero() {
            T::one()
        } else if x == T::infinity() {
            T::zero()
        } else {
            gamma_reg_pair(self.shape, self.rate * x).1
        }
    }
    fn density(&self, x: T) -> Option<T> {
        if x < T::zero() {
            return Some(T::zero());
        }
        if x == T::zero() {
            return Some(if self.shape < T::one() {
                T::infinity()
            } else if self.shape == T::one() {
                self.rate
            } else {
                T::zero()
            });
        }
        let a = self.shape;
        let lx = self.rate * x;
        Some((a * self.rate.ln() + (a - T::one()) * x.ln() - lx - ln_gamma(a)).exp())
    }
    fn sample(&self, rng: &mut dyn RngCore) -> T {
        let g = rand_distr::Gamma::<f64>::new(self.shape.as_f64(), 1.0 / self.rate.as_f64()).expect("validated shape");
        T::lit(g.sample(rng))
    }
    fn lower_tail_index(&self) -> Option<T> {
        Some(self.shape)
    }
}

/// Uniform law on `[lo, hi]`.
#[derive(Debug, Clone, Copy)]
pub struct Uniform<T> {
    lo: T,
    hi: T,
}

impl<T: Real> Uniform<T> {
    pub fn new(lo: T, hi: T) -> Result<Self> {
        if !(lo >= T::zero()) || !(hi > lo) || !hi.is_finite() {
            return Err(Error::param(
                "upper",
                hi.as_f64(),
                "uniform needs 0 <= lower < upper < inf",
            ));
        }
        Ok(Self { lo, hi })
    }

    pub fn unit() -> Self {
        Self {
            lo: T::zero(),
            hi: T::one(),
        }
    }
}

impl<T: Real> ScalarDist<T> for Uniform<T> {
    fn name(&self) -> String {
        format!("uniform({}, {})", self.lo, self.hi)
    }
    fn lower(&self) -> T {
        self.lo
    }
    fn upper(&self) -> T {
        self.hi
    }
    fn cdf(&self, x: T) -> T {
        ((x - self.lo) / (self.hi - self.lo)).max(T::zero()).min(T::one())
    }
    fn survival(&self, x: T) -> T {
        ((self.hi - x) / (self.hi - self.lo)).max(T::zero()).min(T::one())
    }
    fn density(&self, x: T) -> Option<T> {
        Some(if x >= self.lo && x <= self.hi {
            T::one() / (self.hi - self.lo)
        } else {
            T::zero()
        })
    }
    fn quantile(&self, p: T) -> T {
        let p = p.max(T::zero()).min(T::one());
        self.lo + p * (self.hi - self.lo)
    }
    fn lower_tail_index(&self) -> Option<T> {
        (self.lo == T::zero()).then(T::one)
    }
}

/// Unit mass at a single point.
#[derive(Debug, Clone, Copy)]
pub struct PointMass<T> {
    at: T,
}

impl<T: Real> PointMass<T> {
    pub fn new(at: T) -> Result<Self> {
        check_positive("at", at)?;
        Ok(Self { at })
    }

    pub fn location(&self) -> T {
        self.at
    }
}

impl<T: Real> ScalarDist<T> for PointMass<T> {
    fn name(&self) -> String {
        format!("point-mass({})", self.at)
    }
    fn lower(&self) -> T {
        self.at
    }
    fn upper(&self) -> T {
        self.at
    }
    fn cdf(&self, x: T) -> T {
        if x >= self.at {
            T::one()
        } else {
            T::zero()
        }
    }
    fn density(&self, _x: T) -> Option<T> {
        None
    }
    fn has_density(&self) -> bool {
        false
    }
    fn atoms(&self) -> Vec<(T, T)> {
        vec![(self.at, T::one())]
    }
    fn quantile(&self, _p: T) -> T {
        self.at
    }
    fn sample(&self, _rng: &mut dyn RngCore) -> T {
        self.at
    }
}

/// Shape of the test families that are regularly varying at 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PowerKind {
    /// `H(x) = x^γ` on `(0, 1]`.
    PurePower,
    /// `H(x) = x^γ (1 + 1/(1 − ln x)) / 2` on `(0, 1]`; slowly varying factor
    /// tends to 1/2 at 0.
    PowerWithLog,
}

/// Distribution on `(0, 1]` regularly varying at 0 with index `γ`.
#[derive(Debug, Clone, Copy)]
pub struct PowerFamily<T> {
    gamma: T,
    kind: PowerKind,
}

impl<T: Real> PowerFamily<T> {
    pub fn new(gamma: T, kind: PowerKind) -> Result<Self> {
        check_positive("gamma", gamma)?;
        Ok(Self { gamma, kind })
    }

    pub fn pure(gamma: T) -> Result<Self> {
        Self::new(gamma, PowerKind::PurePower)
    }

    pub fn gamma(&self) -> T {
        self.gamma
    }

    pub fn kind(&self) -> PowerKind {
        self.kind
    }

    fn log_factor(x: T) -> T {
        let l = T::one() - x.ln();
        T::lit(0.5) * (T::one() + T::one() / l)
    }
}

impl<T: Real> ScalarDist<T> for PowerFamily<T> {
    fn name(&self) -> String {
        match self.kind {
            PowerKind::PurePower => format!("pure-power({})", self.gamma),
            PowerKind::PowerWithLog => format!("power-with-log({})", self.gamma),
        }
    }
    fn lower(&self) -> T {
        T::zero()
    }
    fn upper(&self) -> T {
        T::one()
    }
    fn cdf(&self, x: T) -> T {
        if x <= T::zero() {
            return T::zero();
        }
        if x >= T::one() {
            return T::one();
        }
        let p = x.powf(self.gamma);
        match self.kind {
            PowerKind::PurePower => p,
            PowerKind::PowerWithLog => p * Self::log_factor(x),
        }
    }
    fn survival(&self, x: T) -> T {
        match self.kind {
            PowerKind::PurePower if x > T::zero() && x < T::one() => -(self.gamma * x.ln()).exp_m1(),
            _ => T::one() - self.cdf(x),
        }
    }
    fn density(&self, x: T) -> Option<T> {
        if x <= T::zero() || x > T::one() {
            return Some(T::zero());
        }
        let g = self.gamma;
        Some(match self.kind {
            PowerKind::PurePower => g * x.powf(g - T::one()),
            PowerKind::PowerWithLog => {
                let l = T::one() - x.ln();
                self.cdf(x) / x * (g + T::one() / (l * (l + T::one())))
            }
        })
    }
    fn quantile(&self, p: T) -> T {
        match self.kind {
            PowerKind::PurePower => p.max(T::zero()).min(T::one()).powf(T::one() / self.gamma),
            PowerKind::PowerWithLog => generic_quantile(self, p),
        }
    }
    fn lower_tail_index(&self) -> Option<T> {
        Some(self.gamma)
    }
}

/// Log-normal law: `exp(μ + σZ)`.
#[derive(Debug, Clone, Copy)]
pub struct LogNormal<T> {
    mu: T,
    sigma: T,
}

impl<T: Real> LogNormal<T> {
    pub fn new(mu: T, sigma: T) -> Result<Self> {
        if !mu.is_finite() {
            return Err(Error::param("mu", mu.as_f64(), "must be finite"));
        }
        check_positive("sigma", sigma)?;
        Ok(Self { mu, sigma })
    }
}

impl<T: Real> ScalarDist<T> for LogNormal<T> {
    fn name(&self) -> String {
        format!("lognormal({}, {})", self.mu, self.sigma)
    }
    fn lower(&self) -> T {
        T::zero()
    }
    fn upper(&self) -> T {
        T::infinity()
    }
    fn cdf(&self, x: T) -> T {
        if x <= T::zero() {
            T::zero()
        } else {
            normal_cdf((x.ln() - self.mu) / self.sigma)
        }
    }
    fn survival(&self, x: T) -> T {
        if x <= T::zero() {
            T::one()
        } else {
            normal_cdf((self.mu - x.ln()) / self.sigma)
        }
    }
    fn density(&self, x: T) -> Option<T> {
        if x <= T::zero() {
            return Some(T::zero());
        }
        let z = (x.ln() - self.mu) / self.sigma;
        let norm = self.sigma * x * T::TAU().sqrt();
        Some((-T::lit(0.5) * z * z).exp() / norm)
    }
    fn sample(&self, rng: &mut dyn RngCore) -> T {
        let d = rand_distr::LogNormal::new(self.mu.as_f64(), self.sigma.as_f64()).expect("validated");
        T::lit(d.sample(rng))
    }
}

/// Law of `1/V` with `V` Weibull(shape, scale): `F(x) = exp(−(x·scale)^{−k})`.
///
/// `V` lies in the Gumbel max-domain, so this is a radial law whose reciprocal
/// is Gumbel-type.
#[derive(Debug, Clone, Copy)]
pub struct ReciprocalWeibull<T> {
    shape: T,
    scale: T,
}

impl<T: Real> ReciprocalWeibull<T> {
    pub fn new(shape: T, scale: T) -> Result<Self> {
        check_positive("shape", shape)?;
        check_positive("scale", scale)?;
        Ok(Self { shape, scale })
    }
}

impl<T: Real> ScalarDist<T> for ReciprocalWeibull<T> {
    fn name(&self) -> String {
        format!("reciprocal-weibull({}, {})", self.shape, self.scale)
    }
    fn lower(&self) -> T {
        T::zero()
    }
    fn upper(&self) -> T {
        T::infinity()
    }
    fn cdf(&self, x: T) -> T {
        if x <= T::zero() {
            T::zero()
        } else {
            (-(x * self.scale).powf(-self.shape)).exp()
        }
    }
    fn survival(&self, x: T) -> T {
        if x <= T::zero() {
            T::one()
        } else {
            -(-(x * self.scale).powf(-self.shape)).exp_m1()
        }
    }
    fn density(&self, x: T) -> Option<T> {
        if x <= T::zero() {
            return Some(T::zero());
        }
        let t = (x * self.scale).powf(-self.shape);
        Some(self.shape * t / x * (-t).exp())
    }
    fn quantile(&self, p: T) -> T {
        if p <= T::zero() {
            return T::zero();
        }
        if p >= T::one() {
            return T::infinity();
        }
        (-p.ln()).powf(-T::one() / self.shape) / self.scale
    }
}

/// A law given by a tabulated CDF (and optionally a tabulated density).
///
/// Without an explicit density grid the derivative of the CDF interpolant is
/// used.
#[derive(Debug, Clone)]
pub struct GridDist<T> {
    cdf: GridFn<T>,
    pdf: Option<GridFn<T>>,
    label: String,
}

impl<T: Real> GridDist<T> {
    pub fn new(cdf: GridFn<T>, pdf: Option<GridFn<T>>, label: impl Into<String>) -> Result<Self> {
        cdf.check_cdf(T::lit(1e-6))?;
        Ok(Self {
            cdf,
            pdf,
            label: label.into(),
        })
    }

    pub fn cdf_grid(&self) -> &GridFn<T> {
        &self.cdf
    }

    pub fn pdf_grid(&self) -> Option<&GridFn<T>> {
        self.pdf.as_ref()
    }
}

impl<T: Real> ScalarDist<T> for GridDist<T> {
    fn name(&self) -> String {
        self.label.clone()
    }
    fn lower(&self) -> T {
        if self.cdf.ys()[0] <= T::zero() {
            self.cdf.x_min()
        } else {
            T::zero()
        }
    }
    fn upper(&self) -> T {
        self.cdf.x_max()
    }
    fn cdf(&self, x: T) -> T {
        if x <= T::zero() {
            return T::zero();
        }
        if x >= self.cdf.x_max() {
            return T::one();
        }
        self.cdf.eval(x).max(T::zero()).min(T::one())
    }
    fn density(&self, x: T) -> Option<T> {
        if x <= T::zero() || x > self.cdf.x_max() {
            return Some(T::zero());
        }
        Some(match &self.pdf {
            Some(p) => p.eval(x).max(T::zero()),
            None => self.cdf.derivative(x).max(T::zero()),
        })
    }
}

/// Empirical law of a sample; quantiles interpolate linearly between order
/// statistics.
#[derive(Debug, Clone)]
pub struct EmpiricalDist<T> {
    sorted: Vec<T>,
}

impl<T: Real> EmpiricalDist<T> {
    pub fn new(samples: &[T]) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptySample);
        }
        if samples.iter().any(|v| !v.is_finite() || *v < T::zero()) {
            return Err(Error::Domain("empirical sample must be finite and nonnegative".into()));
        }
        let mut sorted = samples.to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
        Ok(Self { sorted })
    }

    pub fn sorted(&self) -> &[T] {
        &self.sorted
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }
}

impl<T: Real> ScalarDist<T> for EmpiricalDist<T> {
    fn name(&self) -> String {
        format!("empirical(n = {})", self.sorted.len())
    }
    fn lower(&self) -> T {
        self.sorted[0]
    }
    fn upper(&self) -> T {
        self.sorted[self.sorted.len() - 1]
    }
    fn cdf(&self, x: T) -> T {
        let k = self.sorted.partition_point(|&v| v <= x);
        T::from_usize_lossy(k) / T::from_usize_lossy(self.sorted.len())
    }
    fn density(&self, _x: T) -> Option<T> {
        None
    }
    fn has_density(&self) -> bool {
        false
    }
    fn atoms(&self) -> Vec<(T, T)> {
        let w = T::one() / T::from_usize_lossy(self.sorted.len());
        let mut out: Vec<(T, T)> = Vec::new();
        for &v in &self.sorted {
            match out.last_mut() {
                Some((x, m)) if *x == v => *m = *m + w,
                _ => out.push((v, w)),
            }
        }
        out
    }
    /// Linear interpolation between order statistics: `p = i/n` maps to the
    /// `i`-th smallest value.
    fn quantile(&self, p: T) -> T {
        let n = self.sorted.len();
        if p <= T::zero() {
            return self.sorted[0];
        }
        let pos = p * T::from_usize_lossy(n) - T::one();
        if pos <= T::zero() {
            return self.sorted[0];
        }
        let i = pos.floor().to_usize().unwrap_or(n - 1);
        if i + 1 >= n {
            return self.sorted[n - 1];
        }
        let frac = pos - T::from_usize_lossy(i);
        self.sorted[i] + frac * (self.sorted[i + 1] - self.sorted[i])
    }
    fn sample(&self, rng: &mut dyn RngCore) -> T {
        let i = (rng.next_u64() % self.sorted.len() as u64) as usize;
        self.sorted[i]
    }
}

/// Law of `X^p` for a positive base law and `p > 0`.
#[derive(Debug, Clone)]
pub struct PowerOf<T> {
    base: DistRef<T>,
    p: T,
}

impl<T: Real> PowerOf<T> {
    pub fn new(base: DistRef<T>, p: T) -> Result<Self> {
        check_positive("power", p)?;
        Ok(Self { base, p })
    }
}

impl<T: Real> ScalarDist<T> for PowerOf<T> {
    fn name(&self) -> String {
        format!("({})^{}", self.base.name(), self.p)
    }
    fn lower(&self) -> T {
        self.base.lower().powf(self.p)
    }
    fn upper(&self) -> T {
        self.base.upper().powf(self.p)
    }
    fn cdf(&self, x: T) -> T {
        if x <= T::zero() {
            return T::zero();
        }
        self.base.cdf(x.powf(T::one() / self.p))
    }
    fn survival(&self, x: T) -> T {
        if x <= T::zero() {
            return T::one();
        }
        self.base.survival(x.powf(T::one() / self.p))
    }
    fn density(&self, x: T) -> Option<T> {
        if x <= T::zero() {
            return Some(T::zero());
        }
        let q = T::one() / self.p;
        let y = x.powf(q);
        self.base.density(y).map(|d| d * q * y / x)
    }
    fn has_density(&self) -> bool {
        self.base.has_density()
    }
    fn atoms(&self) -> Vec<(T, T)> {
        self.base
            .atoms()
            .into_iter()
            .map(|(x, m)| (x.powf(self.p), m))
            .collect()
    }
    fn quantile(&self, p: T) -> T {
        self.base.quantile(p).powf(self.p)
    }
    fn sample(&self, rng: &mut dyn RngCore) -> T {
        self.base.sample(rng).powf(self.p)
    }
    fn lower_tail_index(&self) -> Option<T> {
        self.base.lower_tail_index().map(|g| g / self.p)
    }
}

/// Law of the product `R·S` of independent positive factors, with `S`
/// supported in `(0, 1]`.
///
/// The CDF is `∫ P(R <= x/s) dG(s)`, integrated against the density of `S`
/// when it has one and summed over its atoms otherwise.
#[derive(Debug, Clone)]
pub struct ProductDist<T> {
    radial: DistRef<T>,
    factor: DistRef<T>,
}

impl<T: Real> ProductDist<T> {
    pub fn new(radial: DistRef<T>, factor: DistRef<T>) -> Result<Self> {
        if factor.upper() > T::one() || factor.lower() < T::zero() {
            return Err(Error::Domain(format!(
                "product factor {} must live on [0, 1]",
                factor.name()
            )));
        }
        if !factor.has_density() && factor.atoms().is_empty() {
            return Err(Error::Domain(format!(
                "product factor {} needs a density or atoms",
                factor.name()
            )));
        }
        Ok(Self { radial, factor })
    }

    /// `E f(S)`; `s_breaks` are points in `(0, 1)` where `f` has kinks or jumps.
    fn mix<F: Fn(T) -> T>(&self, f: F, s_breaks: &[T]) -> T {
        if !self.factor.has_density() {
            return self.factor.atoms().into_iter().map(|(s, m)| m * f(s)).sum_fold();
        }
        // Integrate in the quantile variable of S to tame density endpoint
        // singularities: ∫_0^1 f(G^{-1}(u)) du.
        let g = |u: T| f(self.factor.quantile(u));
        let tol = Tolerance::relative(T::lit(1e-11));
        let mut breaks: Vec<T> = s_breaks
            .iter()
            .filter(|&&s| s > T::zero() && s < T::one())
            .map(|&s| self.factor.cdf(s))
            .collect();
        breaks.push(T::lit(0.5));
        integrate(&g, T::zero(), T::one(), &breaks, &tol).value
    }

    fn s_breaks(&self, x: T) -> Vec<T> {
        let mut v: Vec<T> = self.radial.atoms().into_iter().map(|(a, _)| x / a).collect();
        v.push(x / self.radial.upper());
        v.push(x / self.radial.lower());
        v.retain(|s| s.is_finite());
        v
    }
}

trait SumFold<T> {
    fn sum_fold(self) -> T;
}

impl<T: Real, I: Iterator<Item = T>> SumFold<T> for I {
    fn sum_fold(self) -> T {
        self.fold(T::zero(), |a, b| a + b)
    }
}

impl<T: Real> ScalarDist<T> for ProductDist<T> {
    fn name(&self) -> String {
        format!("{} * {}", self.radial.name(), self.factor.name())
    }
    fn lower(&self) -> T {
        T::zero()
    }
    fn upper(&self) -> T {
        self.radial.upper() * self.factor.upper()
    }
    fn cdf(&self, x: T) -> T {
        if x <= T::zero() {
            return T::zero();
        }
        self.mix(
            |s| {
                if s > T::zero() {
                    self.radial.cdf(x / s)
                } else {
                    T::one()
                }
            },
            &self.s_breaks(x),
        )
        .max(T::zero())
        .min(T::one())
    }
    fn density(&self, x: T) -> Option<T> {
        if !self.radial.has_density() {
            return None;
        }
        if x <= T::zero() {
            return Some(T::zero());
        }
        Some(self.mix(
            |s| {
                if s > T::zero() {
                    self.radial.density(x / s).unwrap_or(T::zero()) / s
                } else {
                    T::zero()
                }
            },
            &self.s_breaks(x),
        ))
    }
    fn has_density(&self) -> bool {
        self.radial.has_density() || self.factor.has_density()
    }
    fn sample(&self, rng: &mut dyn RngCore) -> T {
        self.radial.sample(rng) * self.factor.sample(rng)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sample::{ks_distance, par_draws};
    use rand::SeedableRng;

    fn families() -> Vec<DistRef<f64>> {
        vec![
            Arc::new(Beta::<f64>::new(1.0, 1.0).unwrap()),
            Arc::new(Beta::<f64>::new(0.5, 0.5).unwrap()),
            Arc::new(Beta::<f64>::new(2.0, 3.0).unwrap()),
            Arc::new(Beta::<f64>::new(0.5, 1.5).unwrap()),
            Arc::new(Gamma::<f64>::new(2.0, 1.0).unwrap()),
            Arc::new(Gamma::<f64>::new(0.5, 2.0).unwrap()),
            Arc::new(Gamma::<f64>::new(1.0, 1.0).unwrap()),
            Arc::new(Uniform::unit()),
            Arc::new(PowerFamily::<f64>::pure(2.0).unwrap()),
            Arc::new(PowerFamily::<f64>::pure(0.5).unwrap()),
            Arc::new(PowerFamily::<f64>::new(1.0, PowerKind::PowerWithLog).unwrap()),
            Arc::new(LogNormal::new(0.0, 1.0).unwrap()),
            Arc::new(ReciprocalWeibull::new(2.0, 1.0).unwrap()),
        ]
    }

    #[test]
    fn beta_examples() {
        let u = Beta::<f64>::new(1.0, 1.0).unwrap();
        assert!((u.cdf(0.3) - 0.3).abs() < 1e-14);
        let b = Beta::<f64>::new(1.0, 2.0).unwrap();
        assert!((b.survival(0.5) - 0.25).abs() < 1e-14);
        let arc = Beta::<f64>::new(0.5, 0.5).unwrap();
        assert!((arc.cdf(0.5) - 0.5).abs() < 1e-13);
        let b23 = Beta::<f64>::new(2.0, 3.0).unwrap();
        assert!((b23.density(0.5).unwrap() - 1.5).abs() < 1e-13);
        assert!(Beta::<f64>::new(0.0, 1.0).is_err());
        assert!(Beta::<f64>::new(1.0, -2.0).is_err());
    }

    #[test]
    fn gamma_examples() {
        let e = Gamma::<f64>::new(1.0, 1.0).unwrap();
        assert!((e.cdf(1.0) - 0.632_120_558_828_557_7).abs() < 1e-14);
        let g = Gamma::<f64>::new(2.0, 1.0).unwrap();
        assert!((g.density(1.0).unwrap() - (-1.0f64).exp()).abs() < 1e-14);
        assert!(Gamma::<f64>::new(1.0, 0.0).is_err());
        let draws = par_draws(1_000_000, 5, |rng: &mut dyn RngCore| ScalarDist::<f64>::sample(&g, rng));
        let mean = draws.iter().sum::<f64>() / draws.len() as f64;
        assert!((mean - 2.0).abs() < 0.01, "{mean}");
    }

    #[test]
    fn power_family_examples() {
        let p = PowerFamily::<f64>::pure(2.0).unwrap();
        assert!((p.cdf(0.1) - 0.01).abs() < 1e-16);
        for &x in &[1e-9, 1e-3, 0.2] {
            assert!((p.cdf(0.5 * x) / p.cdf(x) - 0.25).abs() < 1e-14);
        }
        let l = PowerFamily::<f64>::new(1.0, PowerKind::PowerWithLog).unwrap();
        let x = 1e-6;
        for &t in &[0.1, 0.5, 2.0] {
            let r = l.cdf(t * x) / l.cdf(x);
            assert!((r / t - 1.0).abs() < 0.01, "t = {t}: {r}");
        }
        assert!((l.cdf(1.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn density_integrates_to_cdf_increments() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        for d in families() {
            for _ in 0..20 {
                let p: f64 = Open01.sample(&mut rng);
                let q: f64 = Open01.sample(&mut rng);
                let (pa, pb) = if p < q { (p, q) } else { (q, p) };
                let (a, b) = (d.quantile(pa * 0.98 + 0.01), d.quantile(pb * 0.98 + 0.01));
                let f = |x: f64| d.density(x).unwrap();
                let tol = Tolerance::relative(1e-12);
                let num = integrate(&f, a, b, &[], &tol).value;
                let exact = d.cdf(b) - d.cdf(a);
                assert!((num - exact).abs() <= 1e-8, "{}: [{a}, {b}] {num} vs {exact}", d.name());
            }
        }
    }

    #[test]
    fn quantile_round_trip() {
        for d in families() {
            for &p in &[1e-6, 1e-3, 0.1, 0.5, 0.9, 1.0 - 1e-3] {
                let x = d.quantile(p);
                assert!(
                    (d.cdf(x) - p).abs() <= 1e-9,
                    "{} at p = {p}: x = {x}, F = {}",
                    d.name(),
                    d.cdf(x)
                );
            }
        }
    }

    #[test]
    fn samplers_pass_ks() {
        let crit = 1.63 / (1e5f64).sqrt();
        for (i, d) in families().into_iter().enumerate() {
            let xs = par_draws(100_000, 100 + i as u64, |rng: &mut dyn RngCore| d.sample(rng));
            let ks = ks_distance(&xs, |x| d.cdf(x)).unwrap();
            assert!(ks <= crit, "{}: KS {ks}", d.name());
        }
    }

    #[test]
    fn empirical_quantile_interpolates() {
        let e = EmpiricalDist::<f64>::new(&[4.0, 1.0, 2.0, 3.0]).unwrap();
        assert_eq!(e.quantile(0.25), 1.0);
        assert_eq!(e.quantile(0.5), 2.0);
        assert!((e.quantile(0.625) - 2.5).abs() < 1e-15);
        assert_eq!(e.cdf(2.5), 0.5);
    }

    #[test]
    fn product_of_point_mass_and_beta_is_beta() {
        let r: DistRef<f64> = Arc::new(PointMass::new(1.0).unwrap());
        let s: DistRef<f64> = Arc::new(Beta::<f64>::new(2.0, 3.0).unwrap());
        let w = ProductDist::new(r, s.clone()).unwrap();
        for &x in &[0.05, 0.3, 0.7] {
            assert!((w.cdf(x) - s.cdf(x)).abs() < 1e-9);
        }
    }

    #[test]
    fn product_of_uniforms() {
        let u: DistRef<f64> = Arc::new(Uniform::unit());
        let w = ProductDist::new(u.clone(), u).unwrap();
        let x: f64 = 0.5;
        assert!((w.cdf(x) - (x - x * x.ln())).abs() < 1e-9);
        assert!((w.density(x).unwrap() + x.ln()).abs() < 1e-8);
    }
}
