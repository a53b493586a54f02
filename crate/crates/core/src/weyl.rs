//! Right-sided (Weyl) fractional integrals, their Stieltjes form, the
//! Williamson transform, and numerical n-fold differentiation.

use nalgebra::{DMatrix, DVector};

use crate::dist::ScalarDist;
use crate::error::{Error, Result};
use crate::grid::GridFn;
use crate::quad::{integrate, integrate_to, Tolerance};
use crate::scalar::Real;
use crate::special::ln_gamma;

/// `p_s(x) = x^s`, for any real `s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerWeight<T> {
    pub exponent: T,
}

impl<T: Real> PowerWeight<T> {
    pub fn new(exponent: T) -> Self {
        Self { exponent }
    }

    pub fn eval(&self, x: T) -> T {
        if self.exponent == T::zero() {
            T::one()
        } else {
            x.powf(self.exponent)
        }
    }
}

/// Order `β > 0` of `I_β`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeylOrder<T> {
    beta: T,
}

impl<T: Real> WeylOrder<T> {
    pub fn new(beta: T) -> Result<Self> {
        if beta > T::zero() && beta.is_finite() {
            Ok(Self { beta })
        } else {
            Err(Error::param(
                "order",
                beta.as_f64(),
                "Weyl order must be finite and > 0",
            ))
        }
    }

    pub fn beta(&self) -> T {
        self.beta
    }

    /// The kernel `(y − x)^{β−1}` blows up at `y = x`.
    pub fn is_singular(&self) -> bool {
        self.beta < T::one()
    }
}

/// Accuracy knobs shared by the operators in this module.
#[derive(Debug, Clone, Copy)]
pub struct WeylOptions<T> {
    /// Relative tolerance handed to the adaptive quadrature.
    pub rel_tol: T,
    /// Truncation certificate on infinite ranges: the last panel and the
    /// extrapolated remainder must both fall below this fraction of the total.
    pub trunc_rel: T,
    /// Absolute tolerance, for callers that know the scale that matters.
    pub abs_tol: T,
}

impl<T: Real> Default for WeylOptions<T> {
    fn default() -> Self {
        Self {
            rel_tol: T::lit(1e-11).max(T::default_rel_tol()),
            trunc_rel: T::lit(1e-12).max(T::epsilon() * T::lit(16.0)),
            abs_tol: T::min_positive_value(),
        }
    }
}

impl<T: Real> WeylOptions<T> {
    pub(crate) fn tolerance(&self) -> Tolerance<T> {
        Tolerance {
            abs: self.abs_tol,
            ..Tolerance::relative(self.rel_tol)
        }
    }
}

/// `∫_0^{t_end} t^{β−1} φ(t) dt`.
///
/// On `[0, w]` with `w = min(scale, t_end)` and `β < 1` the substitution
/// `s = t^β` removes the endpoint singularity; the rest is covered by
/// geometric panels.
pub(crate) fn kernel_integral<T: Real, F: Fn(T) -> T>(
    phi: &F,
    beta: T,
    scale: T,
    t_end: T,
    breaks: &[T],
    opts: &WeylOptions<T>,
    context: &str,
) -> Result<T> {
    if !(t_end > T::zero()) {
        return Ok(T::zero());
    }
    let tol = opts.tolerance();
    // A finite upper end gets its own graded panel, so that integrable
    // endpoint singularities of `phi` do not stall the bisection.
    let (body_end, end_panel) = if t_end.is_finite() {
        let m = scale.max(T::min_positive_value()).min(t_end * T::lit(0.5));
        (t_end - m, true)
    } else {
        (t_end, false)
    };
    let w = scale.max(T::min_positive_value()).min(body_end);
    let inner: Vec<T> = breaks.iter().copied().filter(|&b| b > T::zero() && b < w).collect();
    let mut total = if beta < T::one() {
        let inv = T::one() / beta;
        let g = |s: T| phi(s.powf(inv));
        let sb: Vec<T> = inner.iter().map(|&b| b.powf(beta)).collect();
        integrate(&g, T::zero(), w.powf(beta), &sb, &tol).value / beta
    } else {
        let g = |t: T| kernel_power(t, beta) * phi(t);
        integrate(&g, T::zero(), w, &inner, &tol).value
    };
    let g = |t: T| kernel_power(t, beta) * phi(t);
    if body_end > w {
        let outer: Vec<T> = breaks.iter().copied().filter(|&b| b > w && b < body_end).collect();
        let rest = integrate_to(&g, w, body_end, w, &outer, &tol, opts.trunc_rel)
            .map_err(|t| t.into_error(context.to_string()))?;
        total = total + rest.value;
    }
    if end_panel {
        let two = T::lit(2.0);
        let gu = |u: T| two * u * g(t_end - u * u);
        let ub: Vec<T> = breaks
            .iter()
            .copied()
            .filter(|&b| b > body_end && b < t_end)
            .map(|b| (t_end - b).sqrt())
            .collect();
        total = total + integrate(&gu, T::zero(), (t_end - body_end).sqrt(), &ub, &tol).value;
    }
    check_finite(total, context)
}

fn kernel_power<T: Real>(t: T, beta: T) -> T {
    if beta == T::one() {
        T::one()
    } else {
        t.powf(beta - T::one())
    }
}

fn check_finite<T: Real>(v: T, context: &str) -> Result<T> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Divergence {
            context: context.to_string(),
            detail: format!("integral evaluated to {v}"),
        })
    }
}

/// `(I_β h)(x) = (1/Γ(β)) ∫_x^{upper} (y − x)^{β−1} h(y) dy`.
///
/// `upper` may be infinite. A tail that cannot be certified is reported as
/// [`Error::Divergence`], meaning `h` is not integrable against the kernel.
pub fn weyl_integral<T: Real, F: Fn(T) -> T>(h: &F, order: WeylOrder<T>, x: T, upper: T) -> Result<T> {
    weyl_integral_with(h, order, x, upper, &[], &WeylOptions::default())
}

/// [`weyl_integral`] with breakpoints (in `y`) and explicit options.
pub fn weyl_integral_with<T: Real, F: Fn(T) -> T>(
    h: &F,
    order: WeylOrder<T>,
    x: T,
    upper: T,
    breaks: &[T],
    opts: &WeylOptions<T>,
) -> Result<T> {
    check_point(x)?;
    if !(upper > x) {
        return Err(Error::Domain(format!("upper limit {upper} must exceed x = {x}")));
    }
    let beta = order.beta();
    let phi = |t: T| h(x + t);
    let tb: Vec<T> = breaks.iter().map(|&b| b - x).collect();
    let raw = kernel_integral(&phi, beta, first_scale(x), upper - x, &tb, opts, "Weyl integral")?;
    Ok(raw * (-ln_gamma(beta)).exp())
}

fn first_scale<T: Real>(x: T) -> T {
    if x > T::zero() {
        x
    } else {
        T::one()
    }
}

fn check_point<T: Real>(x: T) -> Result<()> {
    if x > T::zero() && x.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "evaluation point must be finite and > 0, got {x}"
        )))
    }
}

/// `(J_{β,g} H)(x) = (1/Γ(β)) ∫_x^ω (y − x)^{β−1} g(y) dH(y)`.
///
/// The absolutely continuous part is integrated through the density; atoms
/// above `x` are summed.
pub fn weyl_stieltjes<T: Real, G: Fn(T) -> T>(dist: &dyn ScalarDist<T>, order: WeylOrder<T>, g: &G, x: T) -> Result<T> {
    weyl_stieltjes_with(dist, order, g, x, &WeylOptions::default())
}

pub fn weyl_stieltjes_with<T: Real, G: Fn(T) -> T>(
    dist: &dyn ScalarDist<T>,
    order: WeylOrder<T>,
    g: &G,
    x: T,
    opts: &WeylOptions<T>,
) -> Result<T> {
    check_point(x)?;
    let beta = order.beta();
    let mut total = T::zero();
    for (a, m) in dist.atoms() {
        if a > x {
            total = total + m * g(a) * kernel_power(a - x, beta);
        }
    }
    if dist.has_density() {
        let upper = dist.upper();
        let lower = dist.lower();
        if upper > x {
            let phi = |t: T| {
                let y = x + t;
                match dist.density(y) {
                    Some(d) if d > T::zero() => g(y) * d,
                    _ => T::zero(),
                }
            };
            let mut tb = Vec::new();
            if lower > x {
                tb.push(lower - x);
            }
            let part = kernel_integral(
                &phi,
                beta,
                first_scale(x),
                upper - x,
                &tb,
                opts,
                "Weyl-Stieltjes integral",
            )?;
            total = total + part;
        }
    }
    check_finite(total * (-ln_gamma(beta)).exp(), "Weyl-Stieltjes integral")
}

/// Stieltjes form against a tabulated CDF: the mass of each grid cell is spread
/// uniformly over the cell and the kernel is averaged over it exactly; the
/// weight is taken at the cell midpoint.
pub fn weyl_stieltjes_grid<T: Real, G: Fn(T) -> T>(cdf: &GridFn<T>, order: WeylOrder<T>, g: &G, x: T) -> Result<T> {
    check_point(x)?;
    let beta = order.beta();
    let xs = cdf.xs();
    let mut total = T::zero();
    for i in 0..xs.len().saturating_sub(1) {
        let (a, b) = (xs[i], xs[i + 1]);
        if b <= x {
            continue;
        }
        let lo = a.max(x);
        let mass = cdf.eval(b) - cdf.eval(lo);
        if mass == T::zero() {
            continue;
        }
        let mid = T::lit(0.5) * (lo + b);
        let avg_kernel = ((b - x).powf(beta) - (lo - x).powf(beta)) / (beta * (b - lo));
        total = total + mass * g(mid) * avg_kernel;
    }
    check_finite(total * (-ln_gamma(beta)).exp(), "Weyl-Stieltjes grid sum")
}

/// Williamson transform `H̄_{1,β}(x) = ∫_x^ω (1 − x/y)^β dH(y)`.
pub fn williamson_transform<T: Real>(dist: &dyn ScalarDist<T>, beta: T, x: T) -> Result<T> {
    if !(beta > T::zero()) {
        return Err(Error::param("beta", beta.as_f64(), "must be > 0"));
    }
    check_point(x)?;
    let kern = |y: T| (T::one() - x / y).max(T::zero()).powf(beta);
    let mut total = T::zero();
    for (a, m) in dist.atoms() {
        if a > x {
            total = total + m * kern(a);
        }
    }
    if dist.has_density() && dist.upper() > x {
        let f = |y: T| match dist.density(y) {
            Some(d) if d > T::zero() => kern(y) * d,
            _ => T::zero(),
        };
        let opts = WeylOptions::<T>::default();
        let tol = opts.tolerance();
        let lower = dist.lower();
        let breaks: Vec<T> = [lower].into_iter().filter(|&b| b > x).collect();
        let est = integrate_to(&f, x, dist.upper(), x, &breaks, &tol, opts.trunc_rel)
            .map_err(|t| t.into_error("Williamson transform"))?;
        total = total + est.value;
    }
    check_finite(total, "Williamson transform")
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn central_difference<T: Real, F: Fn(T) -> T>(f: &F, n: usize, x: T, h: T) -> Option<T> {
    let half = T::lit(n as f64 / 2.0);
    let mut acc = T::zero();
    for k in 0..=n {
        let v = f(x + (half - T::from_usize_lossy(k)) * h);
        if !v.is_finite() {
            return None;
        }
        let c = T::lit(binomial(n, k));
        acc = if k % 2 == 0 { acc + c * v } else { acc - c * v };
    }
    Some(acc / h.powi(n as i32))
}

/// n-th derivative of an evaluation interface at `x`, by central differences
/// with one Richardson extrapolation step.
///
/// The step is `|x|·ε^{1/(n+4)}` (unit scale at `x = 0`), which balances the
/// fourth-order truncation error against rounding.
pub fn nfold_derivative<T: Real, F: Fn(T) -> T>(f: &F, n: usize, x: T) -> Result<T> {
    nfold_derivative_noisy(f, n, x, T::epsilon())
}

/// As [`nfold_derivative`] for an `f` known only to relative accuracy `noise`.
pub fn nfold_derivative_noisy<T: Real, F: Fn(T) -> T>(f: &F, n: usize, x: T, noise: T) -> Result<T> {
    if n == 0 {
        return Err(Error::param("n", 0.0, "derivative order must be >= 1"));
    }
    let scale = if x == T::zero() { T::one() } else { x.abs() };
    let h = scale * noise.max(T::epsilon()).powf(T::one() / T::from_usize_lossy(n + 4));
    let coarse = central_difference(f, n, x, h);
    let fine = central_difference(f, n, x, h * T::lit(0.5));
    match (coarse, fine) {
        (Some(c), Some(fi)) => Ok((T::lit(4.0) * fi - c) / T::lit(3.0)),
        _ => Err(Error::Resolution(format!(
            "function not finite on the difference stencil around x = {x} (step {h})"
        ))),
    }
}

/// n-th derivative of tabulated data at `x` by local least-squares polynomials
/// of degree `n + 2`; the window is chosen by generalized cross-validation.
pub fn nfold_derivative_grid<T: Real>(grid: &GridFn<T>, n: usize, x: T) -> Result<T> {
    if n == 0 {
        return Err(Error::param("n", 0.0, "derivative order must be >= 1"));
    }
    let xs = grid.xs();
    let ys = grid.ys();
    let degree = n + 2;
    let params = degree + 1;
    let min_points = params + 2;
    if xs.len() < min_points {
        return Err(Error::Resolution(format!(
            "need at least {min_points} grid points for a derivative of order {n}, have {}",
            xs.len()
        )));
    }
    if x < grid.x_min() || x > grid.x_max() {
        return Err(Error::Resolution(format!(
            "x = {x} outside the grid [{}, {}]",
            grid.x_min(),
            grid.x_max()
        )));
    }
    let xf = x.as_f64();
    let centre = xs.partition_point(|&v| v < x).min(xs.len() - 1);
    let max_window = (4 * params + 1).min(xs.len());
    let mut best: Option<(f64, f64)> = None;
    for m in min_points..=max_window {
        let start = centre.saturating_sub(m / 2).min(xs.len() - m);
        let idx = start..start + m;
        let span = (xs[start + m - 1] - xs[start]).as_f64();
        let u: Vec<f64> = idx.clone().map(|i| (xs[i].as_f64() - xf) / span).collect();
        let y: Vec<f64> = idx.map(|i| ys[i].as_f64()).collect();
        let a = DMatrix::from_fn(m, params, |r, c| u[r].powi(c as i32));
        let b = DVector::from_vec(y);
        let Some(coef) = a.clone().svd(true, true).solve(&b, 1e-14).ok() else {
            continue;
        };
        let resid = &a * &coef - &b;
        let rss = resid.norm_squared();
        let dof = 1.0 - params as f64 / m as f64;
        let gcv = rss / m as f64 / (dof * dof);
        let fact: f64 = (1..=n).map(|k| k as f64).product();
        let deriv = coef[n] * fact / span.powi(n as i32);
        if best.is_none_or(|(g, _)| gcv < g * (1.0 - 1e-9)) {
            best = Some((gcv, deriv));
        }
    }
    best.map(|(_, d)| T::lit(d))
        .ok_or_else(|| Error::Resolution(format!("no stable local fit around x = {x}")))
}
