//! Tabulated functions on strictly increasing grids.

use std::fmt::Write as _;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// How values between grid nodes are reconstructed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Interpolation {
    /// Fritsch–Carlson (PCHIP) Hermite cubic; preserves monotonicity.
    MonotoneCubic,
    Linear,
    /// Right-continuous step: the value at node `i` holds on `[x_i, x_{i+1})`.
    Step,
}

/// Behaviour outside `[x_first, x_last]`, chosen per side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TailRule {
    /// Hold the end value.
    Clamp,
    /// Power law through the two outermost nodes.
    PowerLawTail,
    Zero,
    /// Constant 1 (CDFs known to have no mass past the grid).
    One,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Extrapolation {
    pub left: TailRule,
    pub right: TailRule,
}

impl Extrapolation {
    /// Power-law lower tail, clamped at the top: the natural choice for CDFs
    /// whose interesting behaviour is near zero.
    pub const CDF: Self = Self {
        left: TailRule::PowerLawTail,
        right: TailRule::Clamp,
    };
    /// Power law on both sides (densities).
    pub const DENSITY: Self = Self {
        left: TailRule::PowerLawTail,
        right: TailRule::PowerLawTail,
    };
    pub const CLAMP: Self = Self {
        left: TailRule::Clamp,
        right: TailRule::Clamp,
    };
    /// Power-law lower tail, 1 past the last node.
    pub const CDF_TO_ONE: Self = Self {
        left: TailRule::PowerLawTail,
        right: TailRule::One,
    };
}

/// A function tabulated on a strictly increasing grid.
#[derive(Debug, Clone)]
pub struct GridFn<T> {
    xs: Vec<T>,
    ys: Vec<T>,
    interpolation: Interpolation,
    extrapolation: Extrapolation,
    slopes: Vec<T>,
}

impl<T: Real> GridFn<T> {
    pub fn new(xs: Vec<T>, ys: Vec<T>, interpolation: Interpolation, extrapolation: Extrapolation) -> Result<Self> {
        if xs.len() != ys.len() {
            return Err(Error::Domain(format!(
                "grid has {} abscissae but {} values",
                xs.len(),
                ys.len()
            )));
        }
        let min_len = if interpolation == Interpolation::Step { 1 } else { 2 };
        if xs.len() < min_len {
            return Err(Error::Domain(format!(
                "grid needs at least {min_len} points, got {}",
                xs.len()
            )));
        }
        if let Some(i) = xs.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(Error::Domain(format!(
                "grid abscissae not strictly increasing at index {} ({} then {})",
                i + 1,
                xs[i],
                xs[i + 1]
            )));
        }
        if xs.iter().chain(ys.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Domain("grid contains non-finite values".into()));
        }
        let slopes = match interpolation {
            Interpolation::MonotoneCubic => pchip_slopes(&xs, &ys),
            _ => Vec::new(),
        };
        Ok(Self {
            xs,
            ys,
            interpolation,
            extrapolation,
            slopes,
        })
    }

    /// Tabulates `f` on `xs`.
    pub fn tabulate<F: Fn(T) -> T>(
        xs: Vec<T>,
        f: F,
        interpolation: Interpolation,
        extrapolation: Extrapolation,
    ) -> Result<Self> {
        let ys = xs.iter().map(|&x| f(x)).collect();
        Self::new(xs, ys, interpolation, extrapolation)
    }

    /// Monotone-cubic CDF grid; checks values lie in `[0, 1]` and never decrease.
    pub fn cdf(xs: Vec<T>, ys: Vec<T>) -> Result<Self> {
        let g = Self::new(xs, ys, Interpolation::MonotoneCubic, Extrapolation::CDF)?;
        g.check_cdf(T::lit(1e-12))?;
        Ok(g)
    }

    /// Linear density grid.
    pub fn density(xs: Vec<T>, ys: Vec<T>) -> Result<Self> {
        Self::new(xs, ys, Interpolation::Linear, Extrapolation::DENSITY)
    }

    pub fn xs(&self) -> &[T] {
        &self.xs
    }

    pub fn ys(&self) -> &[T] {
        &self.ys
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    pub fn interpolation(&self) -> Interpolation {
        self.interpolation
    }

    pub fn extrapolation(&self) -> Extrapolation {
        self.extrapolation
    }

    pub fn x_min(&self) -> T {
        self.xs[0]
    }

    pub fn x_max(&self) -> T {
        self.xs[self.xs.len() - 1]
    }

    /// Same nodes, new values.
    pub fn with_values(&self, ys: Vec<T>) -> Result<Self> {
        Self::new(self.xs.clone(), ys, self.interpolation, self.extrapolation)
    }

    pub fn with_interpolation(&self, interpolation: Interpolation, extrapolation: Extrapolation) -> Result<Self> {
        Self::new(self.xs.clone(), self.ys.clone(), interpolation, extrapolation)
    }

    /// Index `i` with `xs[i] <= x < xs[i+1]`, for `x` inside the grid.
    fn cell(&self, x: T) -> usize {
        let i = self.xs.partition_point(|&v| v <= x);
        i.saturating_sub(1).min(self.xs.len().saturating_sub(2))
    }

    fn tail_left(&self, x: T) -> T {
        let y0 = self.ys[0];
        match self.extrapolation.left {
            TailRule::Zero => T::zero(),
            TailRule::One => T::one(),
            TailRule::Clamp => y0,
            TailRule::PowerLawTail => {
                if self.xs.len() < 2 || self.interpolation == Interpolation::Step {
                    return y0;
                }
                power_tail(self.xs[0], y0, self.xs[1], self.ys[1], x)
            }
        }
    }

    fn tail_right(&self, x: T) -> T {
        let n = self.xs.len();
        let yn = self.ys[n - 1];
        match self.extrapolation.right {
            TailRule::Zero => T::zero(),
            TailRule::One => T::one(),
            TailRule::Clamp => yn,
            TailRule::PowerLawTail => {
                if n < 2 || self.interpolation == Interpolation::Step {
                    return yn;
                }
                power_tail(self.xs[n - 1], yn, self.xs[n - 2], self.ys[n - 2], x)
            }
        }
    }

    pub fn eval(&self, x: T) -> T {
        let n = self.xs.len();
        if x.is_nan() {
            return x;
        }
        if x < self.xs[0] {
            return self.tail_left(x);
        }
        if self.interpolation == Interpolation::Step {
            let i = self.xs.partition_point(|&v| v <= x);
            if i == n {
                return match self.extrapolation.right {
                    TailRule::Zero => T::zero(),
                    TailRule::One => T::one(),
                    _ => self.ys[n - 1],
                };
            }
            return self.ys[i - 1];
        }
        if x > self.xs[n - 1] {
            return self.tail_right(x);
        }
        let i = self.cell(x);
        self.piece(i, x - self.xs[i])
    }

    /// Interpolant on cell `i` at offset `dx` from its left node.
    fn piece(&self, i: usize, dx: T) -> T {
        let (y0, y1) = (self.ys[i], self.ys[i + 1]);
        let h = self.xs[i + 1] - self.xs[i];
        let t = dx / h;
        match self.interpolation {
            Interpolation::Linear => y0 + (y1 - y0) * t,
            Interpolation::MonotoneCubic => {
                let (d0, d1) = (self.slopes[i], self.slopes[i + 1]);
                hermite(y0, y1, d0 * h, d1 * h, t)
            }
            Interpolation::Step => y0,
        }
    }

    fn piece_derivative(&self, i: usize, dx: T) -> T {
        let (y0, y1) = (self.ys[i], self.ys[i + 1]);
        let h = self.xs[i + 1] - self.xs[i];
        match self.interpolation {
            Interpolation::Linear => (y1 - y0) / h,
            Interpolation::MonotoneCubic => {
                let (d0, d1) = (self.slopes[i], self.slopes[i + 1]);
                hermite_derivative(y0, y1, d0 * h, d1 * h, dx / h) / h
            }
            Interpolation::Step => T::zero(),
        }
    }

    /// Cell and in-cell offset of `base + t`, with the offset formed as
    /// `t − (x_i − base)` so that it keeps the precision of `t`.
    fn offset_cell(&self, base: T, t: T) -> Option<(usize, T)> {
        let n = self.xs.len();
        let y = base + t;
        if self.interpolation == Interpolation::Step || !(y >= self.xs[0] && y <= self.xs[n - 1]) {
            return None;
        }
        let i = self.cell(y);
        let dx = t - (self.xs[i] - base);
        let h = self.xs[i + 1] - self.xs[i];
        Some((i, dx.max(T::zero()).min(h)))
    }

    /// `eval(base + t)`, accurate in `t` even when `t` is far below the
    /// resolution of `base`.
    pub fn eval_offset(&self, base: T, t: T) -> T {
        match self.offset_cell(base, t) {
            Some((i, dx)) => self.piece(i, dx),
            None => self.eval(base + t),
        }
    }

    /// `derivative(base + t)`, accurate in `t` like [`GridFn::eval_offset`].
    pub fn derivative_offset(&self, base: T, t: T) -> T {
        match self.offset_cell(base, t) {
            Some((i, dx)) => self.piece_derivative(i, dx),
            None => self.derivative(base + t),
        }
    }

    /// Derivative of the interpolant (zero for steps and clamped tails).
    pub fn derivative(&self, x: T) -> T {
        let n = self.xs.len();
        if self.interpolation == Interpolation::Step || n < 2 {
            return T::zero();
        }
        if x < self.xs[0] || x > self.xs[n - 1] {
            let (rule, xe, xf, ye, yf) = if x < self.xs[0] {
                (self.extrapolation.left, self.xs[0], self.xs[1], self.ys[0], self.ys[1])
            } else {
                (
                    self.extrapolation.right,
                    self.xs[n - 1],
                    self.xs[n - 2],
                    self.ys[n - 1],
                    self.ys[n - 2],
                )
            };
            return match rule {
                TailRule::Clamp | TailRule::Zero | TailRule::One => T::zero(),
                TailRule::PowerLawTail => {
                    let k = power_exponent(xe, ye, xf, yf);
                    match k {
                        Some(k) => k * power_tail(xe, ye, xf, yf, x) / x,
                        None => T::zero(),
                    }
                }
            };
        }
        let i = self.cell(x);
        self.piece_derivative(i, x - self.xs[i])
    }

    /// Exact integral of the interpolant over `[a, b]` (clipped to the grid).
    pub fn integral(&self, a: T, b: T) -> T {
        let a = a.max(self.x_min());
        let b = b.min(self.x_max());
        if !(b > a) {
            return T::zero();
        }
        let n = self.xs.len();
        let mut total = T::zero();
        for i in 0..n - 1 {
            let (x0, x1) = (self.xs[i], self.xs[i + 1]);
            if x1 <= a || x0 >= b {
                continue;
            }
            let lo = x0.max(a);
            let hi = x1.min(b);
            total = total + self.cell_integral(i, lo, hi);
        }
        total
    }

    fn cell_integral(&self, i: usize, lo: T, hi: T) -> T {
        let (x0, x1) = (self.xs[i], self.xs[i + 1]);
        let (y0, y1) = (self.ys[i], self.ys[i + 1]);
        let h = x1 - x0;
        match self.interpolation {
            Interpolation::Step => y0 * (hi - lo),
            Interpolation::Linear => {
                let ya = y0 + (y1 - y0) * (lo - x0) / h;
                let yb = y0 + (y1 - y0) * (hi - x0) / h;
                T::lit(0.5) * (ya + yb) * (hi - lo)
            }
            Interpolation::MonotoneCubic => {
                // Three-point Gauss–Legendre is exact for the cubic piece.
                let half = T::lit(0.5) * (hi - lo);
                let mid = T::lit(0.5) * (hi + lo);
                let node = T::lit(0.774_596_669_241_483_4) * half;
                let w = T::lit(5.0 / 9.0);
                let wc = T::lit(8.0 / 9.0);
                half * (w * self.eval(mid - node) + wc * self.eval(mid) + w * self.eval(mid + node))
            }
        }
    }

    /// Width of the grid cell containing `x` (end cells outside the grid).
    pub fn cell_width(&self, x: T) -> T {
        let i = self.cell(x);
        self.xs[i + 1] - self.xs[i]
    }

    /// Largest drop `max_{i<j} (y_i − y_j)` over the nodes.
    pub fn max_decrease(&self) -> T {
        let mut run_max = self.ys[0];
        let mut worst = T::zero();
        for &y in &self.ys {
            worst = worst.max(run_max - y);
            run_max = run_max.max(y);
        }
        worst
    }

    /// Verifies the grid describes a CDF up to `tol`.
    pub fn check_cdf(&self, tol: T) -> Result<()> {
        let drop = self.max_decrease();
        if drop > tol {
            return Err(Error::Domain(format!("CDF grid decreases by {drop} (tolerance {tol})")));
        }
        let lo = self.ys.iter().copied().fold(T::infinity(), T::min);
        let hi = self.ys.iter().copied().fold(T::neg_infinity(), T::max);
        if lo < -tol || hi > T::one() + tol {
            return Err(Error::Domain(format!(
                "CDF grid values leave [0, 1]: range [{lo}, {hi}]"
            )));
        }
        Ok(())
    }

    /// Running maximum, clipped to `[0, 1]`.
    pub fn clamp_cdf(&self) -> Result<Self> {
        let mut run = T::zero();
        let ys = self
            .ys
            .iter()
            .map(|&y| {
                run = run.max(y.max(T::zero()).min(T::one()));
                run
            })
            .collect();
        self.with_values(ys)
    }

    /// `max_i |self(x_i) − f(x_i)|` over the grid nodes.
    pub fn sup_distance<F: Fn(T) -> T>(&self, f: F) -> T {
        self.xs
            .iter()
            .zip(&self.ys)
            .map(|(&x, &y)| (y - f(x)).abs())
            .fold(T::zero(), T::max)
    }

    /// CSV with header `x,y` and 17 significant digits, rows in increasing x.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::with_capacity(self.xs.len() * 48);
        out.push_str("x,y\n");
        for (x, y) in self.xs.iter().zip(&self.ys) {
            let _ = writeln!(out, "{:.16e},{:.16e}", x.as_f64(), y.as_f64());
        }
        out
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        w.write_all(self.to_csv_string().as_bytes())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv_string()).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    /// Parses the `x,y` CSV format; `origin` is used in error messages.
    pub fn read_csv<R: Read>(
        reader: R,
        origin: &Path,
        interpolation: Interpolation,
        extrapolation: Extrapolation,
    ) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers().map_err(|e| Error::Parse {
            path: origin.to_path_buf(),
            line: 1,
            message: e.to_string(),
        })?;
        if headers.len() != 2 || &headers[0] != "x" || &headers[1] != "y" {
            return Err(Error::Parse {
                path: origin.to_path_buf(),
                line: 1,
                message: format!(
                    "expected header `x,y`, found `{}`",
                    headers.iter().collect::<Vec<_>>().join(",")
                ),
            });
        }
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for record in rdr.records() {
            let record = record.map_err(|e| Error::Parse {
                path: origin.to_path_buf(),
                line: e.position().map_or(0, |p| p.line()),
                message: e.to_string(),
            })?;
            let line = record.position().map_or(0, |p| p.line());
            let parse = |field: &str, name: &str| -> Result<T> {
                field
                    .parse::<f64>()
                    .ok()
                    .and_then(T::from_f64)
                    .ok_or_else(|| Error::Parse {
                        path: origin.to_path_buf(),
                        line,
                        message: format!("cannot parse {name} value `{field}`"),
                    })
            };
            if record.len() != 2 {
                return Err(Error::Parse {
                    path: origin.to_path_buf(),
                    line,
                    message: format!("expected 2 fields, found {}", record.len()),
                });
            }
            xs.push(parse(&record[0], "x")?);
            ys.push(parse(&record[1], "y")?);
        }
        Self::new(xs, ys, interpolation, extrapolation).map_err(|e| Error::Parse {
            path: origin.to_path_buf(),
            line: 0,
            message: e.to_string(),
        })
    }

    pub fn load_csv(path: &Path, interpolation: Interpolation, extrapolation: Extrapolation) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        Self::read_csv(file, path, interpolation, extrapolation)
    }
}

fn power_exponent<T: Real>(xe: T, ye: T, xf: T, yf: T) -> Option<T> {
    if ye > T::zero() && yf > T::zero() {
        Some((yf / ye).ln() / (xf / xe).ln())
    } else {
        None
    }
}

fn power_tail<T: Real>(xe: T, ye: T, xf: T, yf: T, x: T) -> T {
    match power_exponent(xe, ye, xf, yf) {
        Some(k) if xe > T::zero() && x > T::zero() => ye * (x / xe).powf(k),
        _ => {
            if ye == T::zero() {
                T::zero()
            } else {
                ye
            }
        }
    }
}

fn hermite<T: Real>(y0: T, y1: T, m0: T, m1: T, t: T) -> T {
    let t2 = t * t;
    let t3 = t2 * t;
    let two = T::lit(2.0);
    let three = T::lit(3.0);
    let h10 = t3 - two * t2 + t;
    let h01 = -two * t3 + three * t2;
    let h11 = t3 - t2;
    // h00 = 1 − h01; written around y0 so nearby values do not cancel
    y0 + h01 * (y1 - y0) + h10 * m0 + h11 * m1
}

fn hermite_derivative<T: Real>(y0: T, y1: T, m0: T, m1: T, t: T) -> T {
    let t2 = t * t;
    let six = T::lit(6.0);
    let d10 = T::lit(3.0) * t2 - T::lit(4.0) * t + T::one();
    let d01 = six * (t - t2);
    let d11 = T::lit(3.0) * t2 - T::lit(2.0) * t;
    d01 * (y1 - y0) + d10 * m0 + d11 * m1
}

/// PCHIP node slopes (weighted harmonic mean, Fritsch–Butland end conditions).
fn pchip_slopes<T: Real>(xs: &[T], ys: &[T]) -> Vec<T> {
    let n = xs.len();
    let h: Vec<T> = xs.windows(2).map(|w| w[1] - w[0]).collect();
    let delta: Vec<T> = (0..n - 1).map(|i| (ys[i + 1] - ys[i]) / h[i]).collect();
    let mut d = vec![T::zero(); n];
    if n == 2 {
        d[0] = delta[0];
        d[1] = delta[0];
        return d;
    }
    let two = T::lit(2.0);
    for k in 1..n - 1 {
        let (d0, d1) = (delta[k - 1], delta[k]);
        if d0 == T::zero() || d1 == T::zero() || d0.signum() != d1.signum() {
            d[k] = T::zero();
        } else {
            let w1 = two * h[k] + h[k - 1];
            let w2 = h[k] + two * h[k - 1];
            d[k] = (w1 + w2) / (w1 / d0 + w2 / d1);
        }
    }
    let end = |h0: T, h1: T, del0: T, del1: T| -> T {
        let mut s = ((two * h0 + h1) * del0 - h0 * del1) / (h0 + h1);
        if s.signum() != del0.signum() {
            s = T::zero();
        } else if del0.signum() != del1.signum() && s.abs() > (T::lit(3.0) * del0).abs() {
            s = T::lit(3.0) * del0;
        }
        s
    };
    d[0] = end(h[0], h[1], delta[0], delta[1]);
    d[n - 1] = end(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
    d
}

/// Node placement for computed grids.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Spacing {
    Log,
    Linear,
    /// Uniform in `ln(x/(e − x))` for the finite upper endpoint `e`:
    /// logarithmic near 0 and logarithmic toward `e`.
    Logit,
}

/// Grid request: `points` nodes between `min` and `max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec<T> {
    pub min: T,
    pub max: T,
    pub points: usize,
    #[serde(default = "default_spacing")]
    pub spacing: Spacing,
    /// Finite upper endpoint of the support, used by [`Spacing::Logit`].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub endpoint: Option<T>,
}

fn default_spacing() -> Spacing {
    Spacing::Log
}

impl<T: Real> GridSpec<T> {
    pub const DEFAULT_POINTS: usize = 512;

    pub fn log(min: T, max: T, points: usize) -> Self {
        Self {
            min,
            max,
            points,
            spacing: Spacing::Log,
            endpoint: None,
        }
    }

    pub fn linear(min: T, max: T, points: usize) -> Self {
        Self {
            min,
            max,
            points,
            spacing: Spacing::Linear,
            endpoint: None,
        }
    }

    /// Logit spacing between `min` and `max < endpoint`.
    pub fn logit(min: T, max: T, endpoint: T, points: usize) -> Self {
        Self {
            min,
            max,
            points,
            spacing: Spacing::Logit,
            endpoint: Some(endpoint),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.points < 2 {
            return Err(Error::param(
                "grid.points",
                self.points as f64,
                "need at least 2 points",
            ));
        }
        if !(self.max > self.min) || !self.min.is_finite() || !self.max.is_finite() {
            return Err(Error::param(
                "grid.max",
                self.max.as_f64(),
                "grid range must satisfy min < max",
            ));
        }
        if self.spacing != Spacing::Linear && !(self.min > T::zero()) {
            return Err(Error::param(
                "grid.min",
                self.min.as_f64(),
                "log and logit grids need min > 0",
            ));
        }
        if self.spacing == Spacing::Logit {
            match self.endpoint {
                Some(e) if e > self.max && e.is_finite() => {}
                _ => {
                    return Err(Error::param(
                        "grid.endpoint",
                        self.endpoint.map_or(f64::NAN, |e| e.as_f64()),
                        "logit grid needs a finite endpoint above max",
                    ))
                }
            }
        }
        Ok(())
    }

    pub fn nodes(&self) -> Result<Vec<T>> {
        self.validate()?;
        let last = T::from_usize_lossy(self.points - 1);
        let nodes = (0..self.points)
            .map(|i| {
                let t = T::from_usize_lossy(i) / last;
                match self.spacing {
                    Spacing::Log => (self.min.ln() + t * (self.max.ln() - self.min.ln())).exp(),
                    Spacing::Linear => self.min + t * (self.max - self.min),
                    Spacing::Logit => {
                        let e = self.endpoint.expect("validated");
                        let logit = |x: T| (x / (e - x)).ln();
                        let u = logit(self.min) + t * (logit(self.max) - logit(self.min));
                        e / (T::one() + (-u).exp())
                    }
                }
            })
            .collect::<Vec<_>>();
        let mut nodes = nodes;
        nodes[0] = self.min;
        nodes[self.points - 1] = self.max;
        Ok(nodes)
    }
}

/// Right-continuous empirical CDF as a step grid (one node per distinct value).
pub fn empirical_cdf<T: Real>(samples: &[T]) -> Result<GridFn<T>> {
    if samples.is_empty() {
        return Err(Error::EmptySample);
    }
    if samples.iter().any(|v| v.is_nan()) {
        return Err(Error::Domain("sample contains NaN".into()));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("NaN filtered"));
    let n = T::from_usize_lossy(sorted.len());
    let mut xs: Vec<T> = Vec::new();
    let mut ys: Vec<T> = Vec::new();
    for (i, &v) in sorted.iter().enumerate() {
        let frac = T::from_usize_lossy(i + 1) / n;
        if xs.last() == Some(&v) {
            *ys.last_mut().expect("paired with xs") = frac;
        } else {
            xs.push(v);
            ys.push(frac);
        }
    }
    GridFn::new(
        xs,
        ys,
        Interpolation::Step,
        Extrapolation {
            left: TailRule::Zero,
            right: TailRule::Clamp,
        },
    )
}
