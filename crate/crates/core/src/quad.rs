//! Quadrature and root finding.
//!
//! * [`integrate`]: globally adaptive 7/15-point Gauss–Kronrod on a finite
//!   interval, seeded with caller-supplied breakpoints.
//! * [`integrate_to`]: geometric panels `[s, s+w], [s+w, s+2w], [s+2w, s+4w], …`
//!   on a semi-infinite range with an explicit truncation certificate; an
//!   integral whose panels stop shrinking is reported as divergent.
//! * [`bracket_root`]: bisection (geometric when the bracket spans decades).

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::scalar::Real;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_838_258_730,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

// Gauss weights for the odd-indexed Kronrod nodes (1, 3, 5) and the centre.
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Absolute/relative stopping rule for [`integrate`].
#[derive(Debug, Clone, Copy)]
pub struct Tolerance<T> {
    pub abs: T,
    pub rel: T,
    pub max_intervals: usize,
}

impl<T: Real> Default for Tolerance<T> {
    fn default() -> Self {
        Self {
            abs: T::min_positive_value(),
            rel: T::default_rel_tol(),
            max_intervals: 4000,
        }
    }
}

impl<T: Real> Tolerance<T> {
    pub fn relative(rel: T) -> Self {
        Self { rel, ..Self::default() }
    }
}

/// Result of a quadrature call.
#[derive(Debug, Clone, Copy)]
pub struct QuadEstimate<T> {
    pub value: T,
    pub error: T,
    pub evaluations: usize,
    /// False when the interval budget ran out before the tolerance was met.
    pub converged: bool,
}

fn gk15<T: Real, F: Fn(T) -> T>(f: &F, a: T, b: T) -> (T, T) {
    let half = T::lit(0.5);
    let center = half * (a + b);
    let half_len = half * (b - a);
    let fc = f(center);
    let mut kronrod = fc * T::lit(WGK[7]);
    let mut gauss = fc * T::lit(WG[3]);
    for j in 0..7 {
        let dx = half_len * T::lit(XGK[j]);
        let pair = f(center - dx) + f(center + dx);
        kronrod = kronrod + T::lit(WGK[j]) * pair;
        if j % 2 == 1 {
            gauss = gauss + T::lit(WG[j / 2]) * pair;
        }
    }
    let value = kronrod * half_len;
    let err = ((kronrod - gauss) * half_len).abs();
    (value, err)
}

struct Piece<T> {
    a: T,
    b: T,
    value: T,
    err: T,
}

impl<T: Real> PartialEq for Piece<T> {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl<T: Real> Eq for Piece<T> {}
impl<T: Real> PartialOrd for Piece<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<T: Real> Ord for Piece<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.partial_cmp(&other.err).unwrap_or(Ordering::Equal)
    }
}

/// Adaptive Gauss–Kronrod over `[a, b]`, splitting first at every breakpoint
/// that falls strictly inside the interval.
pub fn integrate<T: Real, F: Fn(T) -> T>(f: &F, a: T, b: T, breaks: &[T], tol: &Tolerance<T>) -> QuadEstimate<T> {
    if !(b > a) {
        return QuadEstimate {
            value: T::zero(),
            error: T::zero(),
            evaluations: 0,
            converged: true,
        };
    }
    let mut edges = Vec::with_capacity(breaks.len() + 2);
    edges.push(a);
    edges.extend(breaks.iter().copied().filter(|&x| x > a && x < b));
    edges.push(b);
    edges.sort_by(|x, y| x.partial_cmp(y).unwrap_or(Ordering::Equal));
    edges.dedup();

    let mut heap = BinaryHeap::with_capacity(edges.len() * 2);
    let mut frozen_value = T::zero();
    let mut frozen_err = T::zero();
    let mut evaluations = 0;
    for w in edges.windows(2) {
        let (value, err) = gk15(f, w[0], w[1]);
        evaluations += 15;
        heap.push(Piece {
            a: w[0],
            b: w[1],
            value,
            err,
        });
    }
    let limit = tol.max_intervals.max(heap.len() + 1);
    let tiny_width = T::epsilon() * T::lit(64.0);
    let mut iterations = 0;
    loop {
        let (total, total_err) = heap
            .iter()
            .fold((frozen_value, frozen_err), |(v, e), p| (v + p.value, e + p.err));
        if !total.is_finite() {
            return QuadEstimate {
                value: T::nan(),
                error: T::infinity(),
                evaluations,
                converged: false,
            };
        }
        let target = tol.abs.max(tol.rel * total.abs());
        if total_err <= target {
            return QuadEstimate {
                value: total,
                error: total_err,
                evaluations,
                converged: true,
            };
        }
        if heap.len() >= limit || heap.is_empty() {
            return QuadEstimate {
                value: total,
                error: total_err,
                evaluations,
                converged: false,
            };
        }
        // Refine several worst pieces per sweep to amortize the O(n) total.
        let sweep = (heap.len() / 8).clamp(1, 64);
        for _ in 0..sweep {
            let Some(worst) = heap.pop() else { break };
            let mid = T::lit(0.5) * (worst.a + worst.b);
            if worst.b - worst.a <= tiny_width * mid.abs().max(T::one()) {
                frozen_value = frozen_value + worst.value;
                frozen_err = frozen_err + worst.err;
                continue;
            }
            let (v1, e1) = gk15(f, worst.a, mid);
            let (v2, e2) = gk15(f, mid, worst.b);
            evaluations += 30;
            heap.push(Piece {
                a: worst.a,
                b: mid,
                value: v1,
                err: e1,
            });
            heap.push(Piece {
                a: mid,
                b: worst.b,
                value: v2,
                err: e2,
            });
        }
        iterations += 1;
        if iterations > 100_000 {
            break;
        }
    }
    let total = heap.iter().fold(frozen_value, |v, p| v + p.value);
    QuadEstimate {
        value: total,
        error: T::infinity(),
        evaluations,
        converged: false,
    }
}

/// Why a semi-infinite integral could not be certified.
#[derive(Debug, Clone)]
pub struct Truncation {
    pub panels: usize,
    pub reached: f64,
    pub last_contribution: f64,
    pub total: f64,
}

impl Truncation {
    pub fn into_error(self, context: impl Into<String>) -> Error {
        Error::Divergence {
            context: context.into(),
            detail: format!(
                "no certified remainder after {} panels (reached {:e}, last panel {:e}, running total {:e})",
                self.panels, self.reached, self.last_contribution, self.total
            ),
        }
    }
}

/// Integrates `f` over `[start, end)` where `end` may be `+inf`.
///
/// The range is cut into panels of geometrically growing width starting with
/// `first_width`. On an infinite range the loop stops once the newest panel
/// contributes less than `trunc_rel` of the running total and the geometric
/// extrapolation of the remaining panels is below the same bound. Panels that
/// keep growing for 40 doublings (or a range that overflows) are reported as a
/// [`Truncation`], which callers surface as divergence. Growth is only counted
/// for panels beyond unit scale.
pub fn integrate_to<T: Real, F: Fn(T) -> T>(
    f: &F,
    start: T,
    end: T,
    first_width: T,
    breaks: &[T],
    tol: &Tolerance<T>,
    trunc_rel: T,
) -> std::result::Result<QuadEstimate<T>, Truncation> {
    let mut total = T::zero();
    let mut total_err = T::zero();
    let mut evaluations = 0;
    let mut converged = true;
    let last_break = breaks.iter().copied().filter(|b| b.is_finite()).fold(start, T::max);
    let mut lo = start;
    let mut width = first_width.max(T::min_positive_value());
    let mut prev = T::zero();
    let mut growing = 0usize;
    let mut zero_run = 0usize;
    let mut panels = 0usize;
    let inf_end = !end.is_finite();
    loop {
        let hi = if inf_end { lo + width } else { (lo + width).min(end) };
        if !hi.is_finite() || hi <= lo {
            return Err(Truncation {
                panels,
                reached: lo.as_f64(),
                last_contribution: prev.as_f64(),
                total: total.as_f64(),
            });
        }
        let local_tol = Tolerance {
            abs: tol.abs.max(tol.rel * total.abs() * T::lit(0.1)),
            ..*tol
        };
        let est = integrate(f, lo, hi, breaks, &local_tol);
        evaluations += est.evaluations;
        converged &= est.converged;
        let c = est.value;
        if !c.is_finite() {
            return Err(Truncation {
                panels,
                reached: hi.as_f64(),
                last_contribution: f64::NAN,
                total: total.as_f64(),
            });
        }
        total = total + c;
        total_err = total_err + est.error;
        panels += 1;
        if !inf_end && hi >= end {
            break;
        }
        let past_breaks = hi >= last_break;
        if total == T::zero() {
            zero_run = if c == T::zero() { zero_run + 1 } else { 0 };
            if past_breaks && zero_run >= 64 {
                break;
            }
        } else if past_breaks && panels >= 2 {
            let ac = c.abs();
            let ap = prev.abs();
            if ac < trunc_rel * total.abs() {
                let ratio = if ap > T::zero() { ac / ap } else { T::zero() };
                if ratio < T::lit(0.999) {
                    let remainder = ac * ratio / (T::one() - ratio);
                    if remainder <= trunc_rel * total.abs() {
                        break;
                    }
                }
            }
            // growth below unit scale is the integrand reaching its natural
            // scale, not divergence
            if ap > T::zero() && ac >= ap * T::lit(0.999) && lo >= T::one() {
                growing += 1;
                if growing >= 40 {
                    return Err(Truncation {
                        panels,
                        reached: hi.as_f64(),
                        last_contribution: c.as_f64(),
                        total: total.as_f64(),
                    });
                }
            } else {
                growing = 0;
            }
        }
        prev = c;
        lo = hi;
        if panels > 1 {
            width = width + width;
        }
        if panels > 2000 {
            return Err(Truncation {
                panels,
                reached: lo.as_f64(),
                last_contribution: c.as_f64(),
                total: total.as_f64(),
            });
        }
    }
    Ok(QuadEstimate {
        value: total,
        error: total_err,
        evaluations,
        converged,
    })
}

/// Finds a root of `f` inside `[lo, hi]`, assuming a sign change.
///
/// Bisects geometrically while the bracket spans more than a factor of four on
/// the positive axis, arithmetically otherwise. Stops when the bracket width
/// is below `rel_tol * |hi|` or `f` vanishes exactly.
pub fn bracket_root<T: Real, F: Fn(T) -> T>(f: &F, lo: T, hi: T, rel_tol: T) -> Result<T> {
    let (mut lo, mut hi) = (lo, hi);
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == T::zero() {
        return Ok(lo);
    }
    if fhi == T::zero() {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() || flo.is_nan() || fhi.is_nan() {
        return Err(Error::Domain(format!(
            "root not bracketed in [{lo}, {hi}] (f = {flo}, {fhi})"
        )));
    }
    let four = T::lit(4.0);
    for _ in 0..2000 {
        let mid = if lo > T::zero() && hi > four * lo {
            (lo * hi).sqrt()
        } else {
            T::lit(0.5) * (lo + hi)
        };
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == T::zero() {
            return Ok(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
        if hi - lo <= rel_tol * hi.abs().max(lo.abs()) {
            break;
        }
    }
    Ok(T::lit(0.5) * (lo + hi))
}
