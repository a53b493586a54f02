//! Monte Carlo engines for lower extremes of elliptical and polar vectors:
//! sampling, normalizing constants, and normalized componentwise minima.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::RngCore;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::dist::{Beta, DistRef, EmpiricalDist, PowerOf, ProductDist, ScalarDist};
use crate::error::{Error, Result};
use crate::quad::{bracket_root, integrate, Tolerance};
use crate::sample::{ks_critical_1pct, ks_distance, par_draws, par_indexed};
use crate::tail::SignPairs;

/// Levels `1/6, …, 5/6` of the copula lattice.
const LATTICE: [f64; 5] = [1.0 / 6.0, 2.0 / 6.0, 3.0 / 6.0, 4.0 / 6.0, 5.0 / 6.0];

/// Relative accuracy of `Q(1/a_n) = 1/n`.
pub const NORMALIZING_TOL: f64 = 1e-8;

fn standard_normal(rng: &mut dyn RngCore) -> f64 {
    StandardNormal.sample(rng)
}

fn unit_vector(dim: usize, rng: &mut dyn RngCore) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| standard_normal(rng)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-300 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

/// `n` points uniform on the unit sphere of `R^dim` (normalized Gaussians).
pub fn sample_unit_sphere(dim: usize, n: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    if dim < 2 {
        return Err(Error::param("dim", dim as f64, "must be >= 2"));
    }
    if n == 0 {
        return Err(Error::EmptySample);
    }
    Ok(par_draws(n, seed, |rng: &mut dyn RngCore| unit_vector(dim, rng)))
}

/// How the factor `A` with `AAᵀ = Σ` is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Factorization {
    /// Lower-triangular Cholesky factor.
    #[default]
    Cholesky,
    /// Symmetric square root.
    SymmetricSqrt,
}

/// `X = R·A·U` with `U` uniform on the sphere and `AAᵀ = Σ`.
#[derive(Debug, Clone)]
pub struct EllipticalSpec {
    correlation: DMatrix<f64>,
    factor: DMatrix<f64>,
    radial: DistRef<f64>,
}

impl EllipticalSpec {
    pub fn new(correlation: DMatrix<f64>, radial: DistRef<f64>, how: Factorization) -> Result<Self> {
        let k = correlation.nrows();
        if k < 2 || correlation.ncols() != k {
            return Err(Error::Spec(format!(
                "correlation must be a square matrix of size >= 2, got {}x{}",
                k,
                correlation.ncols()
            )));
        }
        for i in 0..k {
            if (correlation[(i, i)] - 1.0).abs() > 1e-12 {
                return Err(Error::Spec(format!(
                    "correlation diagonal entry {i} is {}, not 1",
                    correlation[(i, i)]
                )));
            }
            for j in 0..i {
                if (correlation[(i, j)] - correlation[(j, i)]).abs() > 1e-12 {
                    return Err(Error::Spec(format!("correlation is not symmetric at ({i}, {j})")));
                }
            }
        }
        let chol = correlation
            .clone()
            .cholesky()
            .ok_or_else(|| Error::Spec("correlation matrix is not positive definite".into()))?;
        let factor = match how {
            Factorization::Cholesky => chol.l(),
            Factorization::SymmetricSqrt => {
                let eig = correlation.clone().symmetric_eigen();
                let root = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
                &eig.eigenvectors * DMatrix::from_diagonal(&root) * eig.eigenvectors.transpose()
            }
        };
        Ok(Self {
            correlation,
            factor,
            radial,
        })
    }

    /// Two coordinates with correlation `rho`.
    pub fn bivariate(rho: f64, radial: DistRef<f64>) -> Result<Self> {
        if !(rho > -1.0 && rho < 1.0) {
            return Err(Error::param("rho", rho, "must lie in (-1, 1)"));
        }
        Self::new(
            DMatrix::from_row_slice(2, 2, &[1.0, rho, rho, 1.0]),
            radial,
            Factorization::Cholesky,
        )
    }

    pub fn dim(&self) -> usize {
        self.correlation.nrows()
    }

    pub fn correlation(&self) -> &DMatrix<f64> {
        &self.correlation
    }

    pub fn factor(&self) -> &DMatrix<f64> {
        &self.factor
    }

    pub fn radial(&self) -> &DistRef<f64> {
        &self.radial
    }

    fn draw(&self, rng: &mut dyn RngCore) -> DVector<f64> {
        let u = DVector::from_vec(unit_vector(self.dim(), rng));
        let r = self.radial.sample(rng);
        &self.factor * u * r
    }

    /// Law of `|X_i|` for any coordinate: `R·sqrt(B_{1/2,(k−1)/2})`.
    pub fn marginal_abs(&self) -> Result<ProductDist<f64>> {
        let b = Beta::new(0.5, 0.5 * (self.dim() as f64 - 1.0))?;
        let root = PowerOf::new(Arc::new(b), 0.5)?;
        ProductDist::new(self.radial.clone(), Arc::new(root))
    }
}

/// `n` draws of `R·A·U`, one row per draw.
pub fn sample_elliptical(spec: &EllipticalSpec, n: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    if n == 0 {
        return Err(Error::EmptySample);
    }
    Ok(par_draws(n, seed, |rng: &mut dyn RngCore| {
        spec.draw(rng).as_slice().to_vec()
    }))
}

/// Scaling constants for the minima of the first (`a_n`) and, where
/// applicable, the second (`b_n`) coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormalizingSequence {
    pub n: usize,
    pub a_n: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b_n: Option<f64>,
}

/// `a_n = 1/Q^{-1}(1/n)`, `Q` the CDF of `|X₁₁|`; equivalently
/// `P(|X₁₁| ≤ 1/a_n) = 1/n`.
pub fn solve_normalizing(abs_law: &dyn ScalarDist<f64>, n: usize) -> Result<NormalizingSequence> {
    Ok(NormalizingSequence {
        n,
        a_n: 1.0 / level_point(abs_law, n)?,
        b_n: None,
    })
}

/// Empirical variant: the quantile interpolates linearly between order
/// statistics, and levels below `1/len` are not resolved.
pub fn solve_normalizing_empirical(abs_sample: &EmpiricalDist<f64>, n: usize) -> Result<NormalizingSequence> {
    if n == 0 {
        return Err(Error::param("n", 0.0, "must be >= 1"));
    }
    if n > abs_sample.len() {
        return Err(Error::Resolution(format!(
            "level 1/{n} is below the resolution 1/{} of the sample",
            abs_sample.len()
        )));
    }
    let x = abs_sample.quantile(1.0 / n as f64);
    if !(x > 0.0) {
        return Err(Error::Resolution(format!("empirical 1/{n} quantile is {x}")));
    }
    Ok(NormalizingSequence {
        n,
        a_n: 1.0 / x,
        b_n: None,
    })
}

/// Solves `Q(x) = 1/n` by bracketing.
fn level_point(q: &dyn ScalarDist<f64>, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::param("n", 0.0, "must be >= 1"));
    }
    if n == 1 {
        let top = q.upper();
        return if top.is_finite() && top > 0.0 {
            Ok(top)
        } else {
            Err(Error::Resolution(format!(
                "{} has unbounded support, 1/a_1 is infinite",
                q.name()
            )))
        };
    }
    let p = 1.0 / n as f64;
    let mut hi = if q.upper().is_finite() { q.upper() } else { 1.0 };
    while q.cdf(hi) < p {
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(Error::Resolution(format!("cannot bracket level {p} for {}", q.name())));
        }
    }
    let mut lo = hi * 0.5;
    while q.cdf(lo) >= p {
        lo *= 0.5;
        if lo < f64::MIN_POSITIVE {
            return Err(Error::Resolution(format!(
                "level {p} lies below the resolvable range of {}",
                q.name()
            )));
        }
    }
    let x = bracket_root(&|x: f64| q.cdf(x) - p, lo, hi, 1e-14)?;
    let got = q.cdf(x);
    if ((got - p) / p).abs() > NORMALIZING_TOL {
        return Err(Error::Resolution(format!(
            "Q(1/a_n) = {got} misses 1/n = {p} beyond {NORMALIZING_TOL:e} relative"
        )));
    }
    Ok(x)
}

/// `𝓖_γ(x) = 1 − exp(−x^γ)` on `x > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LimitLaw {
    pub gamma: f64,
}

impl LimitLaw {
    pub fn new(gamma: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::param("gamma", gamma, "must be finite and > 0"));
        }
        Ok(Self { gamma })
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else {
            -(-x.powf(self.gamma)).exp_m1()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MinimaOptions {
    /// Index of the radial law at 0; read from the family when absent.
    #[serde(default)]
    pub gamma: Option<f64>,
    /// Permit `γ > 1` (limit index `min(γ, 1)`).
    #[serde(default)]
    pub allow_large_gamma: bool,
    /// Keep the rescaled minima in the report.
    #[serde(default)]
    pub keep_minima: bool,
}

/// Normalized componentwise minima against their limit law.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MinimaReport {
    pub n: usize,
    pub reps: usize,
    pub seed: u64,
    /// Index of the radial law at 0.
    pub gamma: f64,
    /// Index `min(γ, 1)` of the limit law.
    pub limit_index: f64,
    /// One normalizing constant per coordinate.
    pub normalizing: Vec<f64>,
    /// KS distance of each coordinate's rescaled minima to `𝓖_{min(γ,1)}`.
    pub ks: Vec<f64>,
    pub ks_critical_1pct: f64,
    /// `max |C_emp − Π|` over the 5×5 lattice and all coordinate pairs.
    pub lattice_deviation: f64,
    /// Rescaled minima, `minima[rep][coord]`.
    #[serde(skip)]
    pub minima: Option<Vec<Vec<f64>>>,
}

fn radial_index(radial: &dyn ScalarDist<f64>, opts: &MinimaOptions, gate: bool) -> Result<f64> {
    let gamma = match opts.gamma.or_else(|| radial.lower_tail_index()) {
        Some(g) if g > 0.0 && g.is_finite() => g,
        Some(g) => return Err(Error::param("gamma", g, "must be finite and > 0")),
        None => {
            return Err(Error::Spec(format!(
                "index of {} at 0 is unknown; supply gamma",
                radial.name()
            )))
        }
    };
    if gate && gamma > 1.0 && !opts.allow_large_gamma {
        return Err(Error::Spec(format!(
            "radial index {gamma} is outside (0, 1]; set allow_large_gamma to run with limit index min(gamma, 1)"
        )));
    }
    Ok(gamma)
}

fn check_budget(n: usize, reps: usize) -> Result<()> {
    if reps == 0 {
        return Err(Error::EmptySample);
    }
    if n == 0 {
        return Err(Error::param("n", 0.0, "block size must be >= 1"));
    }
    Ok(())
}

fn summarize(
    minima: Vec<Vec<f64>>,
    n: usize,
    seed: u64,
    gamma: f64,
    normalizing: Vec<f64>,
    keep: bool,
) -> Result<MinimaReport> {
    let reps = minima.len();
    let dim = normalizing.len();
    let limit = LimitLaw::new(gamma.min(1.0))?;
    let columns: Vec<Vec<f64>> = (0..dim).map(|c| minima.iter().map(|row| row[c]).collect()).collect();
    let ks = columns
        .iter()
        .map(|col| ks_distance(col, |x| limit.cdf(x)))
        .collect::<Result<Vec<_>>>()?;
    let ranks: Vec<Vec<f64>> = columns.iter().map(|c| pseudo_observations(c)).collect();
    let mut dev: f64 = 0.0;
    for i in 0..dim {
        for j in (i + 1)..dim {
            dev = dev.max(lattice_deviation(&ranks[i], &ranks[j]));
        }
    }
    Ok(MinimaReport {
        n,
        reps,
        seed,
        gamma,
        limit_index: limit.gamma,
        normalizing,
        ks,
        ks_critical_1pct: ks_critical_1pct(reps),
        lattice_deviation: dev,
        minima: keep.then_some(minima),
    })
}

/// Ranks scaled to `(0, 1]`.
fn pseudo_observations(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let m = v.len() as f64;
    let mut out = vec![0.0; v.len()];
    for (r, &i) in idx.iter().enumerate() {
        out[i] = (r + 1) as f64 / m;
    }
    out
}

/// `max |C_m(u, v) − uv|` over the lattice.
pub fn lattice_deviation(u: &[f64], v: &[f64]) -> f64 {
    let m = u.len() as f64;
    let mut worst: f64 = 0.0;
    for &a in &LATTICE {
        for &b in &LATTICE {
            let c = u.iter().zip(v).filter(|(&x, &y)| x <= a && y <= b).count() as f64 / m;
            worst = worst.max((c - a * b).abs());
        }
    }
    worst
}

/// `reps` blocks of `n` elliptical vectors; per block and coordinate the
/// minimum of `|X_ji|`, rescaled by `a_n`.
pub fn minima_experiment(
    spec: &EllipticalSpec,
    n: usize,
    reps: usize,
    seed: u64,
    opts: &MinimaOptions,
) -> Result<MinimaReport> {
    check_budget(n, reps)?;
    let gamma = radial_index(spec.radial.as_ref(), opts, true)?;
    let a_n = solve_normalizing(&spec.marginal_abs()?, n)?.a_n;
    let dim = spec.dim();
    let minima = par_indexed(reps, seed, |_, rng| {
        let mut m = vec![f64::INFINITY; dim];
        for _ in 0..n {
            let x = spec.draw(rng);
            for (mi, xi) in m.iter_mut().zip(x.iter()) {
                *mi = mi.min(xi.abs());
            }
        }
        m.into_iter().map(|v| v * a_n).collect::<Vec<f64>>()
    });
    summarize(minima, n, seed, gamma, vec![a_n; dim], opts.keep_minima)
}

/// `(X, Y_ρ) = (T₁RS, ρT₁RS + ρ̃T₂R√(1−S²))`, `ρ̃ = √(1−ρ²)`.
#[derive(Debug, Clone)]
pub struct PolarSpec {
    rho: f64,
    q1: f64,
    q2: f64,
    radial: DistRef<f64>,
    angular: DistRef<f64>,
}

impl PolarSpec {
    pub fn new(rho: f64, q1: f64, q2: f64, radial: DistRef<f64>, angular: DistRef<f64>) -> Result<Self> {
        if !(rho > -1.0 && rho < 1.0) {
            return Err(Error::param("rho", rho, "must lie in (-1, 1)"));
        }
        for (name, q) in [("q1", q1), ("q2", q2)] {
            if !(q > 0.0 && q <= 1.0) {
                return Err(Error::param(name, q, "must lie in (0, 1]"));
            }
        }
        if angular.cdf(0.0) != 0.0 || angular.cdf(1.0) != 1.0 || angular.lower() < 0.0 || angular.upper() > 1.0 {
            return Err(Error::Spec(format!(
                "angular law {} must satisfy G(0) = 0, G(1) = 1",
                angular.name()
            )));
        }
        if radial.cdf(0.0) != 0.0 {
            return Err(Error::Spec(format!(
                "radial law {} must satisfy H(0) = 0",
                radial.name()
            )));
        }
        Ok(Self {
            rho,
            q1,
            q2,
            radial,
            angular,
        })
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn rho_tilde(&self) -> f64 {
        (1.0 - self.rho * self.rho).sqrt()
    }

    pub fn signs(&self) -> SignPairs {
        SignPairs::independent(self.q1, self.q2).expect("validated sign probabilities")
    }

    pub fn radial(&self) -> &DistRef<f64> {
        &self.radial
    }

    pub fn angular(&self) -> &DistRef<f64> {
        &self.angular
    }

    fn draw(&self, rng: &mut dyn RngCore) -> (f64, f64) {
        use rand::Rng;
        let t1 = if rng.random::<f64>() < self.q1 { 1.0 } else { -1.0 };
        let t2 = if rng.random::<f64>() < self.q2 { 1.0 } else { -1.0 };
        let r = self.radial.sample(rng);
        let s = self.angular.sample(rng);
        let x = t1 * r * s;
        (
            x,
            self.rho * x + self.rho_tilde() * t2 * r * (1.0 - s * s).max(0.0).sqrt(),
        )
    }

    /// Law of `|X| = R·S`.
    pub fn abs_x(&self) -> Result<ProductDist<f64>> {
        ProductDist::new(self.radial.clone(), self.angular.clone())
    }

    /// Law of `|Y_ρ| = R·|ρT₁S + ρ̃T₂√(1−S²)|`.
    pub fn abs_y(&self) -> PolarAbsY {
        PolarAbsY { spec: self.clone() }
    }
}

/// `n` draws of `(X, Y_ρ)`.
pub fn sample_polar(spec: &PolarSpec, n: usize, seed: u64) -> Result<Vec<(f64, f64)>> {
    if n == 0 {
        return Err(Error::EmptySample);
    }
    Ok(par_draws(n, seed, |rng: &mut dyn RngCore| spec.draw(rng)))
}

/// CDF of `|Y_ρ|`: `Σ q_{ij} ∫_0^1 H(x/|ρ i s + ρ̃ j √(1−s²)|) dG(s)`,
/// integrated in the quantile variable of `G`.
#[derive(Debug, Clone)]
pub struct PolarAbsY {
    spec: PolarSpec,
}

impl ScalarDist<f64> for PolarAbsY {
    fn name(&self) -> String {
        format!("|Y| (rho {}, radial {})", self.spec.rho, self.spec.radial.name())
    }
    fn lower(&self) -> f64 {
        0.0
    }
    fn upper(&self) -> f64 {
        self.spec.radial.upper()
    }
    fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        let (rho, rt) = (self.spec.rho, self.spec.rho_tilde());
        let q = self.spec.signs();
        let g = &self.spec.angular;
        let tol = Tolerance::relative(1e-11);
        let mut total = 0.0;
        for (i, j, w) in [
            (1.0, 1.0, q.pp),
            (1.0, -1.0, q.pm),
            (-1.0, 1.0, q.mp),
            (-1.0, -1.0, q.mm),
        ] {
            if w == 0.0 {
                continue;
            }
            let f = |u: f64| {
                let s = g.quantile(u);
                let a = (rho * i * s + rt * j * (1.0 - s * s).max(0.0).sqrt()).abs();
                if a <= 0.0 {
                    1.0
                } else {
                    self.spec.radial.cdf(x / a)
                }
            };
            // the mixed-sign factor vanishes at s = ρ̃
            let breaks: Vec<f64> = if rho * i * j < 0.0 { vec![g.cdf(rt)] } else { vec![] };
            total += w * integrate(&f, 0.0, 1.0, &breaks, &tol).value;
        }
        total.clamp(0.0, 1.0)
    }
    fn density(&self, _x: f64) -> Option<f64> {
        None
    }
    fn has_density(&self) -> bool {
        false
    }
}

/// Joint minima of polar pairs: `a_n min|X_j|`, `b_n min|Y_j|`.
pub fn polar_minima_experiment(
    spec: &PolarSpec,
    n: usize,
    reps: usize,
    seed: u64,
    opts: &MinimaOptions,
) -> Result<MinimaReport> {
    if !spec.angular.has_density() {
        return Err(Error::Spec(format!(
            "angular law {} has no density; joint minima convergence needs G with a continuous positive density",
            spec.angular.name()
        )));
    }
    check_budget(n, reps)?;
    let gamma = radial_index(spec.radial.as_ref(), opts, false)?;
    let a_n = solve_normalizing(&spec.abs_x()?, n)?.a_n;
    let b_n = solve_normalizing(&spec.abs_y(), n)?.a_n;
    let minima = par_indexed(reps, seed, |_, rng| {
        let (mut mx, mut my) = (f64::INFINITY, f64::INFINITY);
        for _ in 0..n {
            let (x, y) = spec.draw(rng);
            mx = mx.min(x.abs());
            my = my.min(y.abs());
        }
        vec![mx * a_n, my * b_n]
    });
    summarize(minima, n, seed, gamma, vec![a_n, b_n], opts.keep_minima)
}
