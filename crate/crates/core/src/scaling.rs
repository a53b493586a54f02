//! Beta-product convolution `W = R·S`, `S ~ B_{α,β}`, and its inversion.

use rand::RngCore;
use rayon::prelude::*;
use serde::Serialize;

use crate::dist::{Beta, BetaParams, ScalarDist};
use crate::error::{Error, Result};
use crate::grid::{Extrapolation, GridFn, GridSpec, Interpolation};
use crate::quad::{bracket_root, integrate, integrate_to, Tolerance};
use crate::sample::{ks_critical_1pct, ks_distance, par_draws};
use crate::scalar::Real;
use crate::special::ln_gamma;
use crate::weyl::{
    kernel_integral, nfold_derivative_grid, nfold_derivative_noisy, weyl_integral_with, weyl_stieltjes, PowerWeight,
    WeylOptions, WeylOrder,
};

/// Largest allowed sup-norm gap between the two forward CDF routes.
pub const FORWARD_CONSISTENCY_TOL: f64 = 1e-7;
/// Largest decrease tolerated in an intermediate recovered CDF before clamping.
pub const MONOTONE_TOL: f64 = 1e-6;

fn breaks_of<T: Real>(dist: &dyn ScalarDist<T>) -> Vec<T> {
    let mut b: Vec<T> = dist.atoms().into_iter().map(|(a, _)| a).collect();
    if dist.upper().is_finite() {
        b.push(dist.upper());
    }
    if dist.lower() > T::zero() {
        b.push(dist.lower());
    }
    b
}

/// `H_{α,β}(x)` through the Weyl operator:
/// `Γ(α+β)/Γ(α) · x^α · (I_β p_{−α−β} H)(x)`.
pub fn forward_cdf_weyl<T: Real>(dist: &dyn ScalarDist<T>, params: BetaParams<T>, x: T) -> Result<T> {
    params.validate()?;
    if x <= T::zero() {
        return Ok(T::zero());
    }
    let (a, b) = (params.alpha, params.beta);
    let w = PowerWeight::new(-(a + b));
    let h = |y: T| w.eval(y) * dist.cdf(y);
    let order = WeylOrder::new(b)?;
    let i = weyl_integral_with(&h, order, x, T::infinity(), &breaks_of(dist), &WeylOptions::default())?;
    let v = (ln_gamma(a + b) - ln_gamma(a) + a * x.ln()).exp() * i;
    Ok(v.max(T::zero()).min(T::one()))
}

/// `H_{α,β}(x) = ∫_0^1 H(x/s) b_{α,β}(s) ds` by direct mixture quadrature.
///
/// Each half of `(0, 1)` is mapped so the beta density's endpoint power is
/// absorbed into the measure.
pub fn forward_cdf_mixture<T: Real>(dist: &dyn ScalarDist<T>, params: BetaParams<T>, x: T) -> Result<T> {
    params.validate()?;
    if x <= T::zero() {
        return Ok(T::zero());
    }
    let (a, b) = (params.alpha, params.beta);
    let ln_b = crate::special::ln_beta(a, b);
    let half = T::lit(0.5);
    let f = |s: T| if s > T::zero() { dist.cdf(x / s) } else { T::one() };
    let s_breaks: Vec<T> = breaks_of(dist)
        .into_iter()
        .map(|y| x / y)
        .filter(|&s| s > T::zero() && s < T::one())
        .collect();
    let tol = Tolerance::relative(T::lit(1e-12).max(T::default_rel_tol()));
    let left = {
        let inv = T::one() / a;
        let g = |v: T| {
            let s = v.powf(inv);
            f(s) * (-s).ln_1p().mul_add_free(b - T::one())
        };
        let vb: Vec<T> = s_breaks.iter().filter(|&&s| s < half).map(|&s| s.powf(a)).collect();
        integrate(&g, T::zero(), half.powf(a), &vb, &tol).value / a
    };
    let right = {
        let inv = T::one() / b;
        let g = |w: T| {
            let r = w.powf(inv);
            let s = T::one() - r;
            f(s) * s.ln().mul_add_free(a - T::one())
        };
        let wb: Vec<T> = s_breaks
            .iter()
            .filter(|&&s| s > half)
            .map(|&s| (T::one() - s).powf(b))
            .collect();
        integrate(&g, T::zero(), half.powf(b), &wb, &tol).value / b
    };
    let v = (left + right) * (-ln_b).exp();
    Ok(v.max(T::zero()).min(T::one()))
}

trait ExpScaled<T> {
    fn mul_add_free(self, k: T) -> T;
}

impl<T: Real> ExpScaled<T> for T {
    /// `exp(k·self)`, with `0·(−∞)` read as 0.
    fn mul_add_free(self, k: T) -> T {
        if k == T::zero() {
            T::one()
        } else {
            (k * self).exp()
        }
    }
}

/// `h_{α,β}(x) = Γ(α+β)/Γ(α) · x^{α−1} · (J_{β, p_{1−α−β}} H)(x)`.
pub fn forward_pdf_at<T: Real>(dist: &dyn ScalarDist<T>, params: BetaParams<T>, x: T) -> Result<T> {
    params.validate()?;
    if x <= T::zero() {
        return Ok(T::zero());
    }
    let (a, b) = (params.alpha, params.beta);
    let w = PowerWeight::new(T::one() - a - b);
    let j = weyl_stieltjes(dist, WeylOrder::new(b)?, &|y| w.eval(y), x)?;
    Ok((ln_gamma(a + b) - ln_gamma(a) + (a - T::one()) * x.ln()).exp() * j)
}

/// Forward CDF on a grid, both routes, with their largest disagreement.
#[derive(Debug, Clone)]
pub struct ForwardCdf<T> {
    pub cdf: GridFn<T>,
    pub residual: T,
}

/// Tabulates `H_{α,β}` on `grid`. Both routes are evaluated; a sup-norm gap
/// above [`FORWARD_CONSISTENCY_TOL`] is a [`Error::Consistency`].
pub fn forward_cdf<T: Real>(
    dist: &dyn ScalarDist<T>,
    params: BetaParams<T>,
    grid: &GridSpec<T>,
) -> Result<ForwardCdf<T>> {
    forward_cdf_tol(dist, params, grid, T::lit(FORWARD_CONSISTENCY_TOL))
}

pub fn forward_cdf_tol<T: Real>(
    dist: &dyn ScalarDist<T>,
    params: BetaParams<T>,
    grid: &GridSpec<T>,
    tol: T,
) -> Result<ForwardCdf<T>> {
    params.validate()?;
    let xs = grid.nodes()?;
    let pairs: Vec<(T, T)> = xs
        .par_iter()
        .map(|&x| {
            Ok((
                forward_cdf_weyl(dist, params, x)?,
                forward_cdf_mixture(dist, params, x)?,
            ))
        })
        .collect::<Result<_>>()?;
    let mut residual = T::zero();
    let mut worst_x = xs[0];
    for (&x, &(a, b)) in xs.iter().zip(&pairs) {
        if (a - b).abs() > residual {
            residual = (a - b).abs();
            worst_x = x;
        }
    }
    if residual > tol {
        return Err(Error::Consistency {
            context: format!(
                "forward CDF of {} at x = {worst_x}: Weyl and mixture routes disagree",
                dist.name()
            ),
            residual: residual.as_f64(),
            tolerance: tol.as_f64(),
        });
    }
    let ys: Vec<T> = pairs.iter().map(|&(a, _)| a).collect();
    let cdf = GridFn::new(xs, ys, Interpolation::MonotoneCubic, Extrapolation::CDF)?;
    Ok(ForwardCdf {
        cdf: cdf.clamp_cdf()?,
        residual,
    })
}

/// Tabulates `h_{α,β}` on `grid` (linear interpolation).
pub fn forward_pdf<T: Real>(dist: &dyn ScalarDist<T>, params: BetaParams<T>, grid: &GridSpec<T>) -> Result<GridFn<T>> {
    params.validate()?;
    let xs = grid.nodes()?;
    let ys: Vec<T> = xs
        .par_iter()
        .map(|&x| forward_pdf_at(dist, params, x))
        .collect::<Result<_>>()?;
    GridFn::density(xs, ys)
}

/// Quantile of `H_{α,β}` through the mixture route.
pub fn forward_quantile<T: Real>(dist: &dyn ScalarDist<T>, params: BetaParams<T>, p: T) -> Result<T> {
    let f = |x: T| forward_cdf_mixture(dist, params, x).unwrap_or(T::nan()) - p;
    let mut hi = if dist.upper().is_finite() {
        dist.upper()
    } else {
        dist.quantile(p.max(T::lit(0.5)))
    };
    let mut guard = 0;
    while f(hi) < T::zero() {
        hi = hi * T::lit(4.0);
        guard += 1;
        if guard > 400 {
            return Err(Error::Domain(format!(
                "no upper bracket for the scaled quantile at p = {p}"
            )));
        }
    }
    let mut lo = hi;
    guard = 0;
    while f(lo) >= T::zero() {
        lo = lo / T::lit(16.0);
        guard += 1;
        if guard > 400 {
            return Err(Error::Domain(format!(
                "no lower bracket for the scaled quantile at p = {p}"
            )));
        }
    }
    bracket_root(&f, lo, hi, T::lit(1e-10))
}

/// Default output grid over `[q(10⁻⁶), q(1 − 10⁻⁶)]` of the scaled law: log
/// spacing, or logit spacing when the support has a finite upper endpoint.
pub fn default_grid<T: Real>(dist: &dyn ScalarDist<T>, params: BetaParams<T>, points: usize) -> Result<GridSpec<T>> {
    let lo = forward_quantile(dist, params, T::lit(1e-6))?;
    let hi = forward_quantile(dist, params, T::one() - T::lit(1e-6))?;
    let endpoint = dist.upper();
    let spec = if endpoint.is_finite() && hi < endpoint {
        GridSpec::logit(lo, hi, endpoint, points)
    } else {
        GridSpec::log(lo, hi, points)
    };
    spec.validate()?;
    Ok(spec)
}

/// Base law, its beta scaling, and the scaled CDF and density.
#[derive(Debug, Clone)]
pub struct ScaledPair<T> {
    pub base: String,
    pub params: BetaParams<T>,
    pub scaled_cdf: GridFn<T>,
    pub scaled_pdf: GridFn<T>,
    /// Sup-norm gap between the two forward CDF routes.
    pub residual: T,
    /// Largest gap between `∫ h_{α,β}` from the first node and the CDF
    /// increments; see [`pdf_cdf_residual`].
    pub pdf_residual: T,
}

pub fn forward<T: Real>(dist: &dyn ScalarDist<T>, params: BetaParams<T>, grid: &GridSpec<T>) -> Result<ScaledPair<T>> {
    let cdf = forward_cdf(dist, params, grid)?;
    let pdf = forward_pdf(dist, params, grid)?;
    let pdf_residual = pdf_cdf_residual(dist, params, &pdf, &cdf.cdf)?;
    Ok(ScaledPair {
        base: dist.name(),
        params,
        scaled_cdf: cdf.cdf,
        scaled_pdf: pdf,
        residual: cdf.residual,
        pdf_residual,
    })
}

/// Integrates the tabulated density cell by cell with Simpson's rule (the
/// midpoint is evaluated afresh) and returns the largest gap between the
/// running integral and the CDF increments from the first node.
pub fn pdf_cdf_residual<T: Real>(
    dist: &dyn ScalarDist<T>,
    params: BetaParams<T>,
    pdf: &GridFn<T>,
    cdf: &GridFn<T>,
) -> Result<T> {
    let xs = pdf.xs();
    let mids: Vec<T> = xs
        .par_windows(2)
        .map(|w| forward_pdf_at(dist, params, T::lit(0.5) * (w[0] + w[1])))
        .collect::<Result<_>>()?;
    let c0 = cdf.eval(xs[0]);
    let (mut acc, mut worst) = (T::zero(), T::zero());
    for (i, w) in xs.windows(2).enumerate() {
        let (f0, f1) = (pdf.ys()[i], pdf.ys()[i + 1]);
        acc = acc + (w[1] - w[0]) / T::lit(6.0) * (f0 + T::lit(4.0) * mids[i] + f1);
        worst = worst.max((acc - (cdf.eval(w[1]) - c0)).abs());
    }
    Ok(worst)
}

/// Descending `β = β₀ > β₁ > … > β_{k+1} = 0` with every step in `(0, 1)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecoverySchedule<T> {
    betas: Vec<T>,
}

impl<T: Real> RecoverySchedule<T> {
    pub fn new(betas: Vec<T>) -> Result<Self> {
        if betas.len() < 2 {
            return Err(Error::Schedule(format!(
                "need at least the target and the terminal 0, got {} value(s)",
                betas.len()
            )));
        }
        if *betas.last().expect("nonempty") != T::zero() {
            return Err(Error::Schedule("schedule must end at exactly 0".into()));
        }
        if !(betas[0] > T::zero()) {
            return Err(Error::Schedule(format!(
                "schedule must start at the target beta > 0, got {}",
                betas[0]
            )));
        }
        for (i, w) in betas.windows(2).enumerate() {
            let step = w[0] - w[1];
            if !(step > T::zero() && step < T::one()) {
                return Err(Error::Schedule(format!(
                    "step {} from {} to {} is {step}; each step must lie in (0, 1)",
                    i + 1,
                    w[0],
                    w[1]
                )));
            }
        }
        Ok(Self { betas })
    }

    /// `k = ⌈β⌉` and equal steps `β/(k+1)`.
    pub fn default_for(beta: T) -> Result<Self> {
        if !(beta > T::zero()) || !beta.is_finite() {
            return Err(Error::param("beta", beta.as_f64(), "must be finite and > 0"));
        }
        let k = beta.ceil().to_usize().unwrap_or(1).max(1);
        let kp1 = T::from_usize_lossy(k + 1);
        let mut betas: Vec<T> = (0..=k + 1)
            .map(|i| beta * (T::one() - T::from_usize_lossy(i) / kp1))
            .collect();
        betas[k + 1] = T::zero();
        Self::new(betas)
    }

    pub fn betas(&self) -> &[T] {
        &self.betas
    }

    /// `δ_i = 1 + β_i − β_{i−1}` for `i = 1..=k+1`.
    pub fn deltas(&self) -> Vec<T> {
        self.betas.windows(2).map(|w| T::one() + w[1] - w[0]).collect()
    }

    pub fn target(&self) -> T {
        self.betas[0]
    }
}

fn monotone_grid<T: Real>(xs: Vec<T>, ys: Vec<T>, stage: &str) -> Result<GridFn<T>> {
    let g = GridFn::new(xs, ys, Interpolation::MonotoneCubic, Extrapolation::CDF)?;
    let drop = g.max_decrease();
    if drop > T::lit(MONOTONE_TOL) {
        return Err(Error::RecoveryInstability(format!(
            "{stage}: intermediate CDF decreases by {:e} (tolerance {MONOTONE_TOL:e})",
            drop.as_f64()
        )));
    }
    g.clamp_cdf()
}

/// One inverse step: recovers `H_{i−1}` from `H_i` where
/// `H_i = H_{i−1}` scaled by `B_{α+β_i, β_{i−1}−β_i}`.
///
/// With `a = α + β_i`, `δ = 1 + β_i − β_{i−1}` and `ψ = p_{−a} H_i`,
/// `H_{i−1}(x) = Γ(a)/Γ(α+β_{i−1}) · x^{α+β_{i−1}} · (I_δ(−Dψ))(x)`.
/// The fractional integral is split at `c`, half a grid cell: the derivative
/// of the interpolant is integrated on `[0, c]`, and past `c` the kernel is
/// integrated by parts, so the tabulated derivative is never needed far from
/// `x`. The boundary term is folded into the integral up to `t = x`, which
/// keeps the pieces from cancelling when `c` is tiny.
///
/// `upper` is the right end of the support (`∞` when unbounded); it shapes
/// the continuation of `H_i` past its last node.
pub fn recovery_step_at<T: Real>(h_i: &GridFn<T>, alpha: T, beta_i: T, beta_prev: T, upper: T, x: T) -> Result<T> {
    let a = alpha + beta_i;
    let delta = T::one() + beta_i - beta_prev;
    let cdf = TailedCdf::new(h_i, upper);
    // ψ and ψ' at x + t, with t kept apart from x
    let psi = |t: T| {
        let y = x + t;
        (-a * y.ln()).exp() * cdf.eval(x, t)
    };
    let dpsi = |t: T| {
        let y = x + t;
        (-a * y.ln()).exp() * (cdf.derivative(x, t) - a * cdf.eval(x, t) / y)
    };
    // inside one cell the interpolant is a single smooth piece
    let local = if x < h_i.x_max() {
        h_i.cell_width(x)
    } else {
        cdf.scale(x)
    };
    let c = T::lit(0.5) * local.min(x);
    // the interpolant is smooth only between nodes
    let mut node_breaks: Vec<T> = h_i.xs().iter().map(|&n| n - x).filter(|&b| b > T::zero()).collect();
    node_breaks.extend(cdf.kink(x));
    let log_front = ln_gamma(a) - ln_gamma(alpha + beta_prev) + (alpha + beta_prev) * x.ln() - ln_gamma(delta);
    let front = log_front.exp();
    // accuracy is only needed in units of the resulting CDF
    let opts = WeylOptions {
        abs_tol: T::lit(1e-13) / front,
        ..WeylOptions::default()
    };
    let head = kernel_integral(&|t: T| -dpsi(t), delta, c, c, &node_breaks, &opts, "recovery step")?;
    // Past c, ∫ t^{δ−1}(−ψ') = (1−δ)∫_c^x t^{δ−2}(ψ(c) − ψ(t)) dt + x^{δ−1}ψ(c)
    // − (1−δ)∫_x^∞ t^{δ−2}ψ(t) dt, with every term on the scale of H_i(x).
    let integral = if delta == T::one() {
        head
    } else {
        let tol = Tolerance {
            abs: opts.abs_tol,
            ..Tolerance::relative(opts.rel_tol)
        };
        let split = x;
        let psi_c = psi(c);
        let near = |t: T| (t.ln() * (delta - T::lit(2.0))).exp() * (psi_c - psi(t));
        let inner: Vec<T> = node_breaks.iter().copied().filter(|&b| b > c && b < split).collect();
        let near_est = integrate(&near, c, split, &inner, &tol);
        let far = |t: T| (t.ln() * (delta - T::lit(2.0))).exp() * psi(t);
        let outer: Vec<T> = node_breaks.iter().copied().filter(|&b| b > split).collect();
        let far_est = integrate_to(&far, split, T::infinity(), split, &outer, &tol, opts.trunc_rel)
            .map_err(|t| t.into_error("recovery step"))?;
        let one_minus = T::one() - delta;
        head + one_minus * near_est.value + (split.ln() * (delta - T::one())).exp() * psi_c - one_minus * far_est.value
    };
    Ok(front * integral)
}

/// A tabulated CDF continued past its last node: by an exponential survival
/// tail fitted to the last two nodes, or, when the support ends at a finite
/// `ω`, by a power of `ω − y` reaching 1 at `ω`. Held at 1 when the last
/// nodes show no decay.
struct TailedCdf<'a, T> {
    grid: &'a GridFn<T>,
    x_max: T,
    surv_max: T,
    tail: Tail<T>,
}

#[derive(Clone, Copy)]
enum Tail<T> {
    One,
    Exponential { rate: T },
    ToEndpoint { omega: T, kappa: T },
}

impl<'a, T: Real> TailedCdf<'a, T> {
    fn new(grid: &'a GridFn<T>, upper: T) -> Self {
        let n = grid.len();
        let (x0, x1) = (grid.xs()[n - 2], grid.xs()[n - 1]);
        let s0 = T::one() - grid.ys()[n - 2].min(T::one());
        let s1 = T::one() - grid.ys()[n - 1].min(T::one());
        let decays = s1 > T::zero() && s0 > s1;
        let tail = if !decays {
            Tail::One
        } else if upper.is_finite() && upper > x1 {
            let kappa = (s0 / s1).ln() / ((upper - x0) / (upper - x1)).ln();
            Tail::ToEndpoint { omega: upper, kappa }
        } else {
            Tail::Exponential {
                rate: (s0 / s1).ln() / (x1 - x0),
            }
        };
        Self {
            grid,
            x_max: x1,
            surv_max: s1,
            tail,
        }
    }

    /// Length scale of the tail seen from `x`.
    fn scale(&self, x: T) -> T {
        match self.tail {
            Tail::Exponential { rate } => T::one() / rate,
            Tail::ToEndpoint { omega, .. } if omega > x => omega - x,
            _ => x,
        }
    }

    /// Where the continuation has a kink, as an offset from `base`.
    fn kink(&self, base: T) -> Option<T> {
        match self.tail {
            Tail::ToEndpoint { omega, .. } if omega > base => Some(omega - base),
            _ => None,
        }
    }

    /// `H(base + t)`.
    fn eval(&self, base: T, t: T) -> T {
        let y = base + t;
        if y < self.x_max {
            return self.grid.eval_offset(base, t).max(T::zero()).min(T::one());
        }
        match self.tail {
            Tail::One => T::one(),
            Tail::Exponential { rate } => T::one() - self.surv_max * (-(rate * (t - (self.x_max - base)))).exp(),
            Tail::ToEndpoint { omega, kappa } => {
                let r = ((omega - base) - t) / (omega - self.x_max);
                if r <= T::zero() {
                    T::one()
                } else {
                    T::one() - self.surv_max * r.powf(kappa)
                }
            }
        }
    }

    /// `H'(base + t)`.
    fn derivative(&self, base: T, t: T) -> T {
        let y = base + t;
        if y < self.x_max {
            return self.grid.derivative_offset(base, t);
        }
        match self.tail {
            Tail::One => T::zero(),
            Tail::Exponential { rate } => rate * self.surv_max * (-(rate * (t - (self.x_max - base)))).exp(),
            Tail::ToEndpoint { omega, kappa } => {
                let width = omega - self.x_max;
                let r = ((omega - base) - t) / width;
                if r <= T::zero() {
                    T::zero()
                } else {
                    self.surv_max * kappa * r.powf(kappa - T::one()) / width
                }
            }
        }
    }
}

/// Iterative recovery of `H` from a tabulated `H_{α,β}`.
///
/// Each step is evaluated on the nodes of `scaled`, checked for monotonicity
/// (tolerance [`MONOTONE_TOL`]), clamped, and re-interpolated. The result is
/// taken to be 1 past the last node.
pub fn recover_iterative<T: Real>(
    scaled: &GridFn<T>,
    params: BetaParams<T>,
    schedule: &RecoverySchedule<T>,
) -> Result<GridFn<T>> {
    recover_iterative_bounded(scaled, params, schedule, T::infinity())
}

/// [`recover_iterative`] for a law whose support ends at `upper`. Beta
/// scaling keeps the right endpoint, so every intermediate shares it.
pub fn recover_iterative_bounded<T: Real>(
    scaled: &GridFn<T>,
    params: BetaParams<T>,
    schedule: &RecoverySchedule<T>,
    upper: T,
) -> Result<GridFn<T>> {
    if !(upper > scaled.x_min()) {
        return Err(Error::param(
            "upper",
            upper.as_f64(),
            "must lie right of the first grid node",
        ));
    }
    params.validate()?;
    if (schedule.target() - params.beta).abs() > T::epsilon() * T::lit(16.0) * params.beta {
        return Err(Error::Schedule(format!(
            "schedule starts at {} but beta is {}",
            schedule.target(),
            params.beta
        )));
    }
    scaled.check_cdf(T::lit(MONOTONE_TOL))?;
    let betas = schedule.betas();
    let xs = scaled.xs().to_vec();
    let mut current = scaled
        .with_interpolation(Interpolation::MonotoneCubic, Extrapolation::CDF)?
        .clamp_cdf()?;
    for i in (1..betas.len()).rev() {
        let (bi, bprev) = (betas[i], betas[i - 1]);
        let ys: Vec<T> = xs
            .par_iter()
            .map(|&x| recovery_step_at(&current, params.alpha, bi, bprev, upper, x))
            .collect::<Result<_>>()?;
        current = monotone_grid(xs.clone(), ys, &format!("step {i} (beta {bi} -> {bprev})"))?;
    }
    // the scaled grid reaches the top of the support, and so does H
    current.with_interpolation(Interpolation::MonotoneCubic, Extrapolation::CDF_TO_ONE)
}

/// One integer step: `H_{i−1}(x) = H_i(x) − x·h_i(x)/(α+β_i)` on the nodes of `H_i`.
pub fn recover_integer_step<T: Real>(cdf_i: &GridFn<T>, pdf_i: &GridFn<T>, alpha: T, beta_i: T) -> Result<GridFn<T>> {
    let denom = alpha + beta_i;
    if !(alpha > T::zero()) || !(beta_i >= T::zero()) {
        return Err(Error::param("alpha", alpha.as_f64(), "need alpha > 0 and beta_i >= 0"));
    }
    let xs = cdf_i.xs().to_vec();
    let ys: Vec<T> = xs.iter().map(|&x| cdf_i.eval(x) - x * pdf_i.eval(x) / denom).collect();
    let g = GridFn::new(xs, ys, Interpolation::MonotoneCubic, Extrapolation::CDF)?;
    let drop = g.max_decrease();
    if drop > T::lit(MONOTONE_TOL) {
        return Err(Error::RecoveryInstability(format!(
            "integer step decreases by {:e} (tolerance {MONOTONE_TOL:e})",
            drop.as_f64()
        )));
    }
    Ok(g)
}

/// Density recursion `h_{i−1}(x) = ((α+β_i−1) h_i(x) − x h_i'(x))/(α+β_i)`
/// for an analytic `h_i`.
pub fn density_recursion_step<T: Real, F: Fn(T) -> T>(pdf_i: &F, alpha: T, beta_i: T, x: T) -> Result<T> {
    let a = alpha + beta_i;
    let d = nfold_derivative_noisy(pdf_i, 1, x, T::lit(1e-12))?;
    Ok(((a - T::one()) * pdf_i(x) - x * d) / a)
}

fn derivative_route_checks<T: Real>(params: BetaParams<T>, n: usize, delta: T) -> Result<()> {
    params.validate()?;
    if n == 0 {
        return Err(Error::param("n", 0.0, "must be >= 1"));
    }
    if !(delta >= T::zero() && delta < T::one()) {
        return Err(Error::param("delta", delta.as_f64(), "must lie in [0, 1)"));
    }
    let expect = T::from_usize_lossy(n) - delta;
    if (params.beta - expect).abs() > T::lit(1e-12) * expect.max(T::one()) {
        return Err(Error::param(
            "beta",
            params.beta.as_f64(),
            format!("must equal n - delta = {expect}"),
        ));
    }
    if delta > T::zero() && params.alpha > delta {
        return Err(Error::param(
            "alpha",
            params.alpha.as_f64(),
            format!("the fractional branch needs alpha in (0, delta] = (0, {delta}]"),
        ));
    }
    Ok(())
}

fn normalized<T: Real>(xs: Vec<T>, ys: Vec<T>) -> Result<GridFn<T>> {
    let g = GridFn::density(xs, ys)?;
    let mass = g.integral(g.x_min(), g.x_max());
    let (lo, hi) = (T::lit(0.95), T::lit(1.05));
    if !(mass >= lo && mass <= hi) {
        return Err(Error::RecoveryInstability(format!(
            "recovered density integrates to {mass} over the grid (accepted range [0.95, 1.05])"
        )));
    }
    Ok(g)
}

/// Derivative-route recovery for an analytic scaled density with `β = n − δ`:
/// `h(x) = (−1)^n Γ(α)/Γ(α+n−δ) · x^{α+n−δ−1} · D^n (I_δ p_{1−α} h_{α,β})(x)`.
///
/// `support_upper` bounds the support of the scaled density (may be `inf`).
/// The result is tabulated on `xs` and must carry mass in `[0.95, 1.05]`.
pub fn recover_derivative<T: Real, F: Fn(T) -> T + Sync>(
    scaled_pdf: &F,
    support_upper: T,
    params: BetaParams<T>,
    n: usize,
    delta: T,
    xs: &[T],
) -> Result<GridFn<T>> {
    derivative_route_checks(params, n, delta)?;
    let alpha = params.alpha;
    let w = PowerWeight::new(T::one() - alpha);
    let inner = |y: T| {
        if y < support_upper {
            w.eval(y) * scaled_pdf(y)
        } else {
            T::zero()
        }
    };
    let (f, noise): (Box<dyn Fn(T) -> T + Sync + '_>, T) = if delta == T::zero() {
        (Box::new(inner), T::lit(1e-13))
    } else {
        let order = WeylOrder::new(delta)?;
        let opts = WeylOptions::default();
        let breaks: Vec<T> = [support_upper].into_iter().filter(|b| b.is_finite()).collect();
        (
            Box::new(move |x: T| {
                if x >= support_upper {
                    return T::zero();
                }
                weyl_integral_with(&inner, order, x, support_upper, &breaks, &opts).unwrap_or(T::nan())
            }),
            T::lit(1e-9),
        )
    };
    let front = ln_gamma(alpha) - ln_gamma(alpha + params.beta);
    let sign = if n % 2 == 0 { T::one() } else { -T::one() };
    let ys: Vec<T> = xs
        .par_iter()
        .map(|&x| {
            let d = nfold_derivative_noisy(&|y| f(y), n, x, noise)?;
            Ok(sign * (front + (alpha + params.beta - T::one()) * x.ln()).exp() * d)
        })
        .collect::<Result<_>>()?;
    normalized(xs.to_vec(), ys)
}

/// Derivative-route recovery from a tabulated scaled density. The inner
/// function is tabulated on the grid nodes and differentiated with local
/// polynomial fits.
pub fn recover_derivative_grid<T: Real>(
    scaled_pdf: &GridFn<T>,
    params: BetaParams<T>,
    n: usize,
    delta: T,
) -> Result<GridFn<T>> {
    derivative_route_checks(params, n, delta)?;
    let alpha = params.alpha;
    let w = PowerWeight::new(T::one() - alpha);
    let upper = scaled_pdf.x_max();
    let inner = |y: T| {
        if y <= upper {
            w.eval(y) * scaled_pdf.eval(y).max(T::zero())
        } else {
            T::zero()
        }
    };
    let xs = scaled_pdf.xs().to_vec();
    let tabulated: Vec<T> = if delta == T::zero() {
        xs.iter().map(|&x| inner(x)).collect()
    } else {
        let order = WeylOrder::new(delta)?;
        let opts = WeylOptions::default();
        let breaks = xs.clone();
        xs.par_iter()
            .map(|&x| {
                if x >= upper {
                    Ok(T::zero())
                } else {
                    weyl_integral_with(&inner, order, x, upper, &breaks, &opts)
                }
            })
            .collect::<Result<_>>()?
    };
    let inner_grid = GridFn::new(xs.clone(), tabulated, Interpolation::Linear, Extrapolation::CLAMP)?;
    let front = ln_gamma(alpha) - ln_gamma(alpha + params.beta);
    let sign = if n % 2 == 0 { T::one() } else { -T::one() };
    let ys: Vec<T> = xs
        .iter()
        .map(|&x| {
            let d = nfold_derivative_grid(&inner_grid, n, x)?;
            Ok(sign * (front + (alpha + params.beta - T::one()) * x.ln()).exp() * d)
        })
        .collect::<Result<_>>()?;
    normalized(xs, ys)
}

/// KS distance of `B_{α,β}·B_{α+β,γ}` draws against the `B_{α,β+γ}` CDF.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ComposeReport {
    pub n: usize,
    pub ks: f64,
    pub critical_1pct: f64,
    pub passed: bool,
}

pub fn beta_compose_check(alpha: f64, beta: f64, gamma: f64, n: usize, seed: u64) -> Result<ComposeReport> {
    if n == 0 {
        return Err(Error::EmptySample);
    }
    let first = Beta::new(alpha, beta)?;
    let second = Beta::new(alpha + beta, gamma)?;
    let target = Beta::new(alpha, beta + gamma)?;
    let draws = par_draws(n, seed, |rng: &mut dyn RngCore| first.sample(rng) * second.sample(rng));
    let ks = ks_distance(&draws, |x| target.cdf(x))?;
    let critical = ks_critical_1pct(n);
    Ok(ComposeReport {
        n,
        ks,
        critical_1pct: critical,
        passed: ks <= critical,
    })
}
