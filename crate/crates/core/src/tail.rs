//! Regular variation at 0: index estimation, the product index law, beta
//! lower-tail constants and the polar-scaling lower tail.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, RngCore};
use serde::Serialize;

use crate::dist::{Beta, BetaParams, LogNormal, ReciprocalWeibull, ScalarDist};
use crate::error::{Error, Result};
use crate::sample::par_draws;
use crate::scalar::Real;
use crate::scaling::{forward_cdf_weyl, forward_pdf_at};
use crate::special::ln_gamma;

/// Smallest number of tail points an estimate is based on.
pub const MIN_TAIL_POINTS: usize = 50;

/// Lower-tail window as a pair of probability levels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuantileWindow {
    pub lower: f64,
    pub upper: f64,
}

impl Default for QuantileWindow {
    fn default() -> Self {
        Self {
            lower: 1e-4,
            upper: 1e-2,
        }
    }
}

impl QuantileWindow {
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        let w = Self { lower, upper };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lower > 0.0 && self.lower < 0.2) {
            return Err(Error::param("window.lower", self.lower, "must lie in (0, 0.2)"));
        }
        if !(self.upper > self.lower && self.upper < 0.2) {
            return Err(Error::param("window.upper", self.upper, "must lie in (lower, 0.2)"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TailMethod {
    /// Least-squares slope of `ln F(u)` against `ln u`.
    LogLogRegression,
    /// Hill estimator on reciprocals of the smallest order statistics.
    Hill,
}

/// Estimated index of regular variation at 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailReport {
    pub index_hat: f64,
    /// Thresholds `(u_min, u_max)` the estimate used.
    pub window: (f64, f64),
    pub stderr: f64,
    /// R² of the log–log regression over the window.
    pub diagnostic: f64,
    pub method: TailMethod,
    /// Grid points (regression) or order statistics (Hill) used.
    pub points: usize,
}

/// Where the lower tail comes from.
#[derive(Clone, Copy)]
pub enum TailSource<'a, T: Real> {
    Dist(&'a dyn ScalarDist<T>),
    Samples(&'a [T]),
}

impl<T: Real> fmt::Debug for TailSource<'_, T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TailSource::Dist(d) => write!(f, "Dist({})", d.name()),
            TailSource::Samples(s) => write!(f, "Samples(n = {})", s.len()),
        }
    }
}

/// Index `γ` of `F(x) = x^γ L(x)` as `x ↓ 0`.
///
/// Analytic input is regressed on 64 log-spaced points between the window
/// quantiles. Samples go through the Hill estimator on the
/// `k = min(n^0.6, #points below the upper quantile)` smallest values.
pub fn rv_index_at_zero<T: Real>(source: TailSource<'_, T>, window: QuantileWindow) -> Result<TailReport> {
    window.validate()?;
    match source {
        TailSource::Dist(d) => index_from_dist(d, window),
        TailSource::Samples(s) => {
            let v: Vec<f64> = s.iter().map(|x| x.as_f64()).collect();
            hill_index(&v, window)
        }
    }
}

fn index_from_dist<T: Real>(dist: &dyn ScalarDist<T>, window: QuantileWindow) -> Result<TailReport> {
    let lo = dist.quantile(T::lit(window.lower)).as_f64();
    let hi = dist.quantile(T::lit(window.upper)).as_f64();
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::Domain(format!(
            "{} has no resolvable lower tail in the window ({lo}, {hi})",
            dist.name()
        )));
    }
    const M: usize = 64;
    let (a, b) = (lo.ln(), hi.ln());
    let pts: Vec<(f64, f64)> = (0..M)
        .map(|i| {
            let lx = a + (b - a) * i as f64 / (M - 1) as f64;
            (lx, dist.cdf(T::lit(lx.exp())).as_f64().ln())
        })
        .filter(|(_, ly)| ly.is_finite())
        .collect();
    if pts.len() < 3 {
        return Err(Error::InsufficientTail {
            needed: 3,
            got: pts.len(),
        });
    }
    let fit = LineFit::new(&pts);
    Ok(TailReport {
        index_hat: fit.slope.max(0.0),
        window: (lo, hi),
        stderr: fit.slope_stderr,
        diagnostic: fit.r2,
        method: TailMethod::LogLogRegression,
        points: pts.len(),
    })
}

fn hill_index(samples: &[f64], window: QuantileWindow) -> Result<TailReport> {
    if samples.iter().any(|&x| !(x > 0.0) || !x.is_finite()) {
        return Err(Error::Domain("tail-index samples must be positive and finite".into()));
    }
    let n = samples.len();
    let below = (n as f64 * window.upper).floor() as usize;
    if below < MIN_TAIL_POINTS {
        return Err(Error::InsufficientTail {
            needed: MIN_TAIL_POINTS,
            got: below,
        });
    }
    let k = ((n as f64).powf(0.6).ceil() as usize).min(below).max(MIN_TAIL_POINTS);
    let mut v = samples.to_vec();
    // only the k+1 smallest values matter
    v.select_nth_unstable_by(k, |a, b| a.total_cmp(b));
    let mut low = v[..=k].to_vec();
    low.sort_by(|a, b| a.total_cmp(b));
    let threshold = low[k];
    let ln_t = threshold.ln();
    let xi = low[..k].iter().map(|x| ln_t - x.ln()).sum::<f64>() / k as f64;
    if !(xi > 0.0) {
        return Err(Error::Domain(
            "tail sample is degenerate (ties at the threshold)".into(),
        ));
    }
    let gamma = 1.0 / xi;
    let pts: Vec<(f64, f64)> = low[..k]
        .iter()
        .enumerate()
        .map(|(i, x)| (x.ln(), ((i as f64 + 0.5) / n as f64).ln()))
        .collect();
    let fit = LineFit::new(&pts);
    Ok(TailReport {
        index_hat: gamma,
        window: (low[0], threshold),
        stderr: gamma / (k as f64).sqrt(),
        diagnostic: fit.r2,
        method: TailMethod::Hill,
        points: k,
    })
}

struct LineFit {
    slope: f64,
    slope_stderr: f64,
    r2: f64,
}

impl LineFit {
    fn new(pts: &[(f64, f64)]) -> Self {
        let m = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
        let slope = sxy / sxx;
        let sse = (syy - slope * sxy).max(0.0);
        let r2 = if syy > 0.0 { 1.0 - sse / syy } else { 1.0 };
        let slope_stderr = if pts.len() > 2 {
            (sse / (m - 2.0) / sxx).sqrt()
        } else {
            0.0
        };
        Self {
            slope,
            slope_stderr,
            r2,
        }
    }
}

/// An index together with a flag for the equal-index boundary, where the
/// plain minimum rule holds only up to slowly varying corrections.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IndexLaw<T> {
    pub index: T,
    pub boundary: bool,
}

/// Index of `R·S` for `R ∈ RV_γ` and `S ∈ RV_α`: `min(γ, α)`.
pub fn product_index<T: Real>(gamma: T, alpha: T) -> Result<IndexLaw<T>> {
    positive("gamma", gamma)?;
    positive("alpha", alpha)?;
    let boundary = gamma == alpha;
    if boundary {
        log::warn!("gamma = alpha = {gamma}: product index is min(gamma, alpha) only up to slowly varying terms");
    }
    Ok(IndexLaw {
        index: gamma.min(alpha),
        boundary,
    })
}

/// `C` in `P(B_{α,β} < s) ~ C s^α`: `Γ(α+β)/(Γ(α+1)Γ(β))`.
pub fn beta_lower_tail_constant<T: Real>(params: BetaParams<T>) -> Result<T> {
    params.validate()?;
    let (a, b) = (params.alpha, params.beta);
    Ok((ln_gamma(a + b) - ln_gamma(a + T::one()) - ln_gamma(b)).exp())
}

/// Limit of `H_k(x)/H_{k+1}(x)` as `x ↓ 0` for a base in `RV_γ`:
/// `Γ(α+β_{k+1})Γ(α+β_k−γ) / (Γ(α+β_k)Γ(α+β_{k+1}−γ))`.
pub fn theorem1_ratio_constant<T: Real>(alpha: T, beta_k: T, beta_k1: T, gamma: T) -> Result<T> {
    positive("alpha", alpha)?;
    if !(beta_k1 >= T::zero() && beta_k >= beta_k1) {
        return Err(Error::param(
            "beta_k",
            beta_k.as_f64(),
            format!("need beta_k >= beta_k1 >= 0 (beta_k1 = {beta_k1})"),
        ));
    }
    if !(gamma >= T::zero()) {
        return Err(Error::param("gamma", gamma.as_f64(), "must be >= 0"));
    }
    if gamma >= alpha + beta_k1 {
        return Err(Error::Domain(format!(
            "gamma = {gamma} >= alpha + beta_k1 = {}: the limit constant is undefined",
            alpha + beta_k1
        )));
    }
    let lr = ln_gamma(alpha + beta_k1) + ln_gamma(alpha + beta_k - gamma)
        - ln_gamma(alpha + beta_k)
        - ln_gamma(alpha + beta_k1 - gamma);
    Ok(lr.exp())
}

/// `x·h_{α,β}(x)/H_{α,β}(x)` next to its limit `min(γ, α)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DensityTailRatio<T> {
    pub x: T,
    pub ratio: T,
    pub limit: T,
}

pub fn density_tail_relation_check<T: Real>(
    dist: &dyn ScalarDist<T>,
    params: BetaParams<T>,
    gamma: T,
    x_small: T,
) -> Result<DensityTailRatio<T>> {
    params.validate()?;
    positive("gamma", gamma)?;
    let cdf = forward_cdf_weyl(dist, params, x_small)?;
    let pdf = forward_pdf_at(dist, params, x_small)?;
    if !(cdf > T::zero()) {
        return Err(Error::Domain(format!(
            "H_(alpha,beta)({x_small}) = 0; x is below the support"
        )));
    }
    Ok(DensityTailRatio {
        x: x_small,
        ratio: x_small * pdf / cdf,
        limit: gamma.min(params.alpha),
    })
}

/// Radial laws whose reciprocal lies in the Gumbel max-domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GumbelFamily {
    /// `1/R` lognormal(0, 1).
    Lognormal,
    /// `1/R` Weibull with shape 2.
    WeibullType,
}

/// Samples `W = R·S` with `1/R` in the Gumbel max-domain and estimates the
/// index of `W` at 0, which should be `α`.
pub fn gumbel_scaling_index_check(
    family: GumbelFamily,
    params: BetaParams<f64>,
    n: usize,
    seed: u64,
    window: QuantileWindow,
) -> Result<TailReport> {
    let s = Beta::from_params(params)?;
    let w = match family {
        GumbelFamily::Lognormal => {
            let inv = LogNormal::new(0.0, 1.0)?;
            par_draws(n, seed, |rng: &mut dyn RngCore| s.sample(rng) / inv.sample(rng))
        }
        GumbelFamily::WeibullType => {
            let r = ReciprocalWeibull::new(2.0, 1.0)?;
            par_draws(n, seed, |rng: &mut dyn RngCore| r.sample(rng) * s.sample(rng))
        }
    };
    rv_index_at_zero(TailSource::Samples(&w), window)
}

/// Evaluation interface for a slowly varying function.
pub type SlowlyVarying<T> = Arc<dyn Fn(T) -> T + Send + Sync>;

/// Local behaviour of the angular law around `ρ` and `ρ̃`:
/// `G(ρ+t) − G(ρ−t) = L_ρ(t) t^{α_ρ}`, likewise at `ρ̃`.
#[derive(Clone)]
pub struct LocalRegularVariation<T> {
    pub alpha_rho: T,
    pub alpha_rho_tilde: T,
    pub l_rho: SlowlyVarying<T>,
    pub l_rho_tilde: SlowlyVarying<T>,
    /// `L_ρ = c·L_ρ̃`, required when the two indices coincide.
    pub c: Option<T>,
}

impl<T: Real> fmt::Debug for LocalRegularVariation<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LocalRegularVariation")
            .field("alpha_rho", &self.alpha_rho)
            .field("alpha_rho_tilde", &self.alpha_rho_tilde)
            .field("c", &self.c)
            .finish_non_exhaustive()
    }
}

impl<T: Real> LocalRegularVariation<T> {
    pub fn new(
        alpha_rho: T,
        alpha_rho_tilde: T,
        l_rho: SlowlyVarying<T>,
        l_rho_tilde: SlowlyVarying<T>,
        c: Option<T>,
    ) -> Result<Self> {
        for (name, v) in [("alpha_rho", alpha_rho), ("alpha_rho_tilde", alpha_rho_tilde)] {
            if !(v >= T::zero() && v.is_finite()) {
                return Err(Error::param(name, v.as_f64(), "must be finite and >= 0"));
            }
        }
        if alpha_rho == alpha_rho_tilde {
            match c {
                Some(c) if c > T::zero() && c.is_finite() => {}
                Some(c) => return Err(Error::param("c", c.as_f64(), "must be finite and > 0")),
                None => {
                    return Err(Error::Spec(
                        "equal local indices need the proportionality constant c with L_rho = c L_rho_tilde".into(),
                    ))
                }
            }
        }
        Ok(Self {
            alpha_rho,
            alpha_rho_tilde,
            l_rho,
            l_rho_tilde,
            c,
        })
    }

    /// Both indices 1 with constant `L = 2g` at the two points.
    pub fn from_density_values(g_rho: T, g_rho_tilde: T) -> Result<Self> {
        for (name, v) in [("g(rho)", g_rho), ("g(rho_tilde)", g_rho_tilde)] {
            if !(v > T::zero() && v.is_finite()) {
                return Err(Error::param(
                    name,
                    v.as_f64(),
                    "density must be positive at rho and rho_tilde",
                ));
            }
        }
        let two = T::lit(2.0);
        let (a, b) = (two * g_rho, two * g_rho_tilde);
        Self::new(
            T::one(),
            T::one(),
            Arc::new(move |_| a),
            Arc::new(move |_| b),
            Some(g_rho / g_rho_tilde),
        )
    }

    /// Density case read off the angular law at `ρ` and `ρ̃ = √(1−ρ²)`.
    pub fn from_density(angular: &dyn ScalarDist<T>, rho: T) -> Result<Self> {
        let rt = rho_tilde(rho)?;
        let g = |x: T| {
            angular
                .density(x)
                .ok_or_else(|| Error::Spec(format!("angular law {} has no density", angular.name())))
        };
        Self::from_density_values(g(rho)?, g(rt)?)
    }
}

/// Probabilities `q_{i,j} = P(T₁=i, T₂=j)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SignPairs {
    pub pp: f64,
    pub pm: f64,
    pub mp: f64,
    pub mm: f64,
}

impl SignPairs {
    pub fn new(pp: f64, pm: f64, mp: f64, mm: f64) -> Result<Self> {
        let q = Self { pp, pm, mp, mm };
        for (name, v) in [("q(1,1)", pp), ("q(1,-1)", pm), ("q(-1,1)", mp), ("q(-1,-1)", mm)] {
            if !(v >= 0.0 && v <= 1.0) {
                return Err(Error::param(name, v, "must lie in [0, 1]"));
            }
        }
        if ((pp + pm + mp + mm) - 1.0).abs() > 1e-12 {
            return Err(Error::param(
                "q",
                pp + pm + mp + mm,
                "sign-pair probabilities must sum to 1",
            ));
        }
        Ok(q)
    }

    /// Independent signs with `P(T₁=1) = q1`, `P(T₂=1) = q2`.
    pub fn independent(q1: f64, q2: f64) -> Result<Self> {
        Self::new(q1 * q2, q1 * (1.0 - q2), (1.0 - q1) * q2, (1.0 - q1) * (1.0 - q2))
    }

    fn draw(&self, rng: &mut dyn RngCore) -> (f64, f64) {
        let u: f64 = rng.random();
        if u < self.pp {
            (1.0, 1.0)
        } else if u < self.pp + self.pm {
            (1.0, -1.0)
        } else if u < self.pp + self.pm + self.mp {
            (-1.0, 1.0)
        } else {
            (-1.0, -1.0)
        }
    }
}

fn rho_tilde<T: Real>(rho: T) -> Result<T> {
    if !(rho > T::zero() && rho < T::one()) {
        return Err(Error::param("rho", rho.as_f64(), "must lie in (0, 1)"));
    }
    Ok((T::one() - rho * rho).sqrt())
}

/// Two-term lower-tail law of `S_ρ = |ρT₁S + ρ̃T₂√(1−S²)|` in its
/// customary form:
/// `q_{1,−1}(ρu)^{α_ρ̃}L_ρ̃(u) + q_{−1,1}(ρ̃u)^{α_ρ}L_ρ(u)`.
///
/// Both sign pairs vanish at `S = ρ̃` with slope `1/ρ`, so the second term
/// is misplaced; [`polar_scale_tail_corrected`] gives the law that matches
/// simulation. This form is kept for comparison.
pub fn polar_scale_tail<T: Real>(rho: T, q: SignPairs, lrv: &LocalRegularVariation<T>, u: T) -> Result<T> {
    let rt = rho_tilde(rho)?;
    positive("u", u)?;
    let first = T::lit(q.pm) * (rho * u).powf(lrv.alpha_rho_tilde) * (lrv.l_rho_tilde)(u);
    let second = T::lit(q.mp) * (rt * u).powf(lrv.alpha_rho) * (lrv.l_rho)(u);
    Ok(first + second)
}

/// `P(S_ρ ≤ u) ~ (q_{1,−1} + q_{−1,1}) (ρu)^{α_ρ̃} L_ρ̃(ρu)`.
///
/// For a density `g` this is `2 P(T₁T₂ = −1) g(ρ̃) ρ u`.
pub fn polar_scale_tail_corrected<T: Real>(rho: T, q: SignPairs, lrv: &LocalRegularVariation<T>, u: T) -> Result<T> {
    rho_tilde(rho)?;
    positive("u", u)?;
    let t = rho * u;
    Ok(T::lit(q.pm + q.mp) * t.powf(lrv.alpha_rho_tilde) * (lrv.l_rho_tilde)(t))
}

/// Monte Carlo estimate of `P(S_ρ ≤ u)` with `n` seeded draws.
pub fn polar_scale_tail_mc(
    angular: &dyn ScalarDist<f64>,
    rho: f64,
    q: SignPairs,
    u: f64,
    n: usize,
    seed: u64,
) -> Result<f64> {
    let rt = rho_tilde(rho)?;
    positive("u", u)?;
    if n == 0 {
        return Err(Error::EmptySample);
    }
    let hits = par_draws(n, seed, |rng: &mut dyn RngCore| {
        let (t1, t2) = q.draw(rng);
        let s = angular.sample(rng);
        ((rho * t1 * s + rt * t2 * (1.0 - s * s).max(0.0).sqrt()).abs() <= u) as u32
    });
    Ok(hits.iter().map(|&h| h as u64).sum::<u64>() as f64 / n as f64)
}

/// Indices of `|X|` and `|Y_ρ|` in the polar model.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregationIndices<T> {
    /// `min(α, γ)`.
    pub gamma1: T,
    /// `min(γ, α_ρ, α_ρ̃)`.
    pub gamma2: T,
    pub boundary: bool,
    /// Side condition the result relies on, if any.
    pub hypothesis: Option<String>,
}

pub fn aggregation_indices<T: Real>(
    gamma: T,
    alpha: T,
    lrv: &LocalRegularVariation<T>,
) -> Result<AggregationIndices<T>> {
    positive("gamma", gamma)?;
    positive("alpha", alpha)?;
    let local = lrv.alpha_rho.min(lrv.alpha_rho_tilde);
    let boundary = gamma == alpha || gamma == local;
    if boundary {
        log::warn!("equal indices (gamma = {gamma}, alpha = {alpha}, local = {local}): boundary case");
    }
    let hypothesis = (lrv.alpha_rho == lrv.alpha_rho_tilde).then(|| {
        format!(
            "L_rho = c L_rho_tilde with c = {}",
            lrv.c.map(|c| c.as_f64()).unwrap_or(f64::NAN)
        )
    });
    Ok(AggregationIndices {
        gamma1: alpha.min(gamma),
        gamma2: gamma.min(local),
        boundary,
        hypothesis,
    })
}

fn positive<T: Real>(name: &'static str, v: T) -> Result<()> {
    if v > T::zero() && v.is_finite() {
        Ok(())
    } else {
        Err(Error::param(name, v.as_f64(), "must be finite and > 0"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::{Gamma, PointMass, PowerFamily, Uniform};

    fn bp(a: f64, b: f64) -> BetaParams<f64> {
        BetaParams::new(a, b).unwrap()
    }

    #[test]
    fn pure_power_index_is_exact() {
        for &(lo, hi) in &[(1e-4, 1e-2), (1e-3, 0.1), (0.01, 0.15)] {
            let d = PowerFamily::<f64>::pure(2.0).unwrap();
            let r = rv_index_at_zero(TailSource::Dist(&d), QuantileWindow::new(lo, hi).unwrap()).unwrap();
            assert!((r.index_hat - 2.0).abs() < 1e-6, "{r:?}");
            assert!(r.window.0 < r.window.1);
        }
    }

    #[test]
    fn window_is_validated() {
        assert!(QuantileWindow::new(0.0, 0.01).is_err());
        assert!(QuantileWindow::new(0.02, 0.01).is_err());
        assert!(QuantileWindow::new(0.01, 0.3).is_err());
    }

    #[test]
    fn hill_on_beta_and_gamma_samples() {
        let b = Beta::<f64>::new(0.5, 0.5).unwrap();
        let s = par_draws(1_000_000, 11, |rng: &mut dyn RngCore| b.sample(rng));
        let r = rv_index_at_zero(TailSource::Samples(&s), QuantileWindow::default()).unwrap();
        assert!((r.index_hat - 0.5).abs() < 0.05, "{r:?}");
        assert_eq!(r.method, TailMethod::Hill);

        let g = Gamma::<f64>::new(2.0, 1.0).unwrap();
        let s = par_draws(1_000_000, 12, |rng: &mut dyn RngCore| g.sample(rng));
        let r = rv_index_at_zero(TailSource::Samples(&s), QuantileWindow::default()).unwrap();
        assert!((r.index_hat - 2.0).abs() < 0.15, "{r:?}");
    }

    #[test]
    fn short_samples_are_rejected() {
        let s = [0.1, 0.2, 0.3];
        let err = rv_index_at_zero(TailSource::Samples(&s[..]), QuantileWindow::default()).unwrap_err();
        assert!(matches!(err, Error::InsufficientTail { .. }));
        let err = rv_index_at_zero(TailSource::Samples(&[-1.0; 10_000][..]), QuantileWindow::default()).unwrap_err();
        assert!(matches!(err, Error::Domain(_)));
    }

    #[test]
    fn product_index_cases() {
        assert_eq!(
            product_index(2.0, 0.5).unwrap(),
            IndexLaw {
                index: 0.5,
                boundary: false
            }
        );
        assert_eq!(
            product_index(0.5, 2.0).unwrap(),
            IndexLaw {
                index: 0.5,
                boundary: false
            }
        );
        assert_eq!(
            product_index(1.0, 1.0).unwrap(),
            IndexLaw {
                index: 1.0,
                boundary: true
            }
        );
        assert!(product_index(0.0, 1.0).is_err());
    }

    #[test]
    fn beta_tail_constants() {
        assert!((beta_lower_tail_constant(bp(1.0, 1.0)).unwrap() - 1.0).abs() < 1e-14);
        let c = beta_lower_tail_constant(bp(0.5, 0.5)).unwrap();
        assert!((c - 2.0 / std::f64::consts::PI).abs() < 1e-13);
        assert!((beta_lower_tail_constant(bp(2.0, 3.0)).unwrap() - 6.0).abs() < 1e-12);
        for &(a, b) in &[(0.5, 0.5), (1.0, 2.0), (2.0, 3.0)] {
            let c = beta_lower_tail_constant(bp(a, b)).unwrap();
            let s = 1e-4;
            let ratio = Beta::new(a, b).unwrap().cdf(s) / (c * s.powf(a));
            assert!((ratio - 1.0).abs() <= 0.01, "({a},{b}): {ratio}");
        }
        let c = beta_lower_tail_constant(bp(0.5, 0.5)).unwrap();
        let ratio = Beta::new(0.5, 0.5).unwrap().cdf(1e-6) / (c * 1e-3);
        assert!((ratio - 1.0).abs() < 1e-3);
    }

    #[test]
    fn ratio_constant_cases() {
        assert!((theorem1_ratio_constant(1.0_f64, 1.0, 0.0, 1e-8).unwrap() - 1.0).abs() < 1e-6);
        assert!((theorem1_ratio_constant(1.0_f64, 1.0, 0.0, 0.5).unwrap() - 0.5).abs() < 1e-13);
        assert!(matches!(
            theorem1_ratio_constant(1.0, 1.0, 0.0, 1.0),
            Err(Error::Domain(_))
        ));
        assert!(theorem1_ratio_constant(1.0, 0.0, 1.0, 0.5).is_err());
    }

    #[test]
    fn ratio_constant_matches_one_scaling_step() {
        let h = PowerFamily::<f64>::pure(0.5).unwrap();
        let x = 1e-4;
        let after = forward_cdf_weyl(&h, bp(1.0, 1.0), x).unwrap();
        let measured = h.cdf(x) / after;
        let c = theorem1_ratio_constant(1.0, 1.0, 0.0, 0.5).unwrap();
        assert!((measured / c - 1.0).abs() < 0.02, "{measured} vs {c}");
    }

    #[test]
    fn density_relation() {
        let h = PowerFamily::<f64>::pure(0.5).unwrap();
        let near = density_tail_relation_check(&h, bp(1.0, 1.0), 0.5, 1e-4).unwrap();
        assert!((near.ratio - 0.5).abs() < 0.02, "{near:?}");
        let far = density_tail_relation_check(&h, bp(1.0, 1.0), 0.5, 1e-2).unwrap();
        assert!((near.ratio - 0.5).abs() < (far.ratio - 0.5).abs());

        let p = PointMass::new(1.0).unwrap();
        let r = density_tail_relation_check(&p, bp(2.0, 1.0), 5.0, 1e-4).unwrap();
        assert!((r.ratio - 2.0).abs() < 0.02, "{r:?}");
        assert_eq!(r.limit, 2.0);
    }

    #[test]
    fn gumbel_radial_inherits_beta_index() {
        let w = QuantileWindow::default();
        let r = gumbel_scaling_index_check(GumbelFamily::Lognormal, bp(1.0, 1.0), 1_000_000, 3, w).unwrap();
        assert!((r.index_hat - 1.0).abs() < 0.1, "{r:?}");
        let r = gumbel_scaling_index_check(GumbelFamily::Lognormal, bp(0.5, 2.0), 1_000_000, 4, w).unwrap();
        assert!((r.index_hat - 0.5).abs() < 0.07, "{r:?}");
        let r = gumbel_scaling_index_check(GumbelFamily::WeibullType, bp(1.0, 1.0), 200_000, 5, w).unwrap();
        assert!((r.index_hat - 1.0).abs() < 0.15, "{r:?}");
        let err = gumbel_scaling_index_check(GumbelFamily::Lognormal, bp(1.0, 1.0), 10, 3, w).unwrap_err();
        assert!(matches!(err, Error::InsufficientTail { .. }));
    }

    #[test]
    fn polar_tail_forms() {
        let q = SignPairs::independent(0.5, 0.5).unwrap();
        let lrv = LocalRegularVariation::from_density(&Uniform::<f64>::unit(), 0.6).unwrap();
        let printed = polar_scale_tail(0.6, q, &lrv, 1e-3).unwrap();
        assert!((printed - 0.7e-3).abs() < 1e-15);
        let fixed = polar_scale_tail_corrected(0.6, q, &lrv, 1e-3).unwrap();
        assert!((fixed - 0.6e-3).abs() < 1e-15);
        // linear in u in the density case
        let twice = polar_scale_tail(0.6, q, &lrv, 2e-3).unwrap();
        assert!((twice - 2.0 * printed).abs() < 1e-15);

        let same = SignPairs::new(0.5, 0.0, 0.0, 0.5).unwrap();
        assert_eq!(polar_scale_tail(0.6, same, &lrv, 1e-3).unwrap(), 0.0);
        assert_eq!(polar_scale_tail_corrected(0.6, same, &lrv, 1e-3).unwrap(), 0.0);
    }

    #[test]
    fn polar_tail_simulation_matches_corrected_form() {
        let q = SignPairs::independent(0.5, 0.5).unwrap();
        let g = Uniform::<f64>::unit();
        let mc = polar_scale_tail_mc(&g, 0.6, q, 1e-3, 2_000_000, 9).unwrap();
        // binomial sd at p = 6e-4 and n = 2e6 is about 1.7e-5
        assert!((mc - 0.6e-3).abs() < 6e-5, "{mc}");
    }

    #[test]
    fn local_rv_needs_c_when_indices_coincide() {
        let one: SlowlyVarying<f64> = Arc::new(|_| 1.0);
        let err = LocalRegularVariation::new(1.0, 1.0, one.clone(), one.clone(), None).unwrap_err();
        assert!(matches!(err, Error::Spec(_)));
        assert!(LocalRegularVariation::new(1.0, 2.0, one.clone(), one.clone(), None).is_ok());
        assert!(SignPairs::new(0.5, 0.5, 0.5, 0.0).is_err());
    }

    #[test]
    fn aggregation_cases() {
        let lrv = LocalRegularVariation::from_density_values(1.0, 1.0).unwrap();
        let a = aggregation_indices(2.0, 1.0, &lrv).unwrap();
        assert_eq!((a.gamma1, a.gamma2), (1.0, 1.0));
        assert!(a.hypothesis.is_some());
        let a = aggregation_indices(0.5, 3.0, &lrv).unwrap();
        assert_eq!((a.gamma1, a.gamma2), (0.5, 0.5));
        assert!(!a.boundary);
        let a = aggregation_indices(1.0, 1.0, &lrv).unwrap();
        assert_eq!(a.gamma1, 1.0);
        assert!(a.boundary);
    }
}
