//! Special functions: log-gamma, regularized incomplete beta and gamma, erfc.
//!
//! Log-gamma uses a 14-term Lanczos-type series (g = 671/128) that is accurate
//! to a few ulps for every positive argument. The incomplete functions use the
//! power series / modified-Lentz continued fraction pair with the switchover
//! at the usual symmetry point, which keeps the relative error near 1e-14 for
//! parameters in the range exercised here.

use crate::error::{Error, Result};
use crate::scalar::Real;

const LANCZOS: [f64; 14] = [
    57.156_235_665_862_923_5,
    -59.597_960_355_475_491_2,
    14.136_097_974_741_747_1,
    -0.491_913_816_097_620_199,
    0.339_946_499_848_118_887e-4,
    0.465_236_289_270_485_756e-4,
    -0.983_744_753_048_795_646e-4,
    0.158_088_703_224_912_494e-3,
    -0.210_264_441_724_104_883e-3,
    0.217_439_618_115_212_643e-3,
    -0.164_318_106_536_763_890e-3,
    0.844_182_239_838_527_433e-4,
    -0.261_908_384_015_814_087e-4,
    0.368_991_826_595_316_234e-5,
];

const MAX_ITER: usize = 20_000;

/// `ln Γ(x)` for `x > 0`; returns NaN outside the domain.
pub fn ln_gamma<T: Real>(x: T) -> T {
    if !(x > T::zero()) {
        return T::nan();
    }
    let half = T::lit(0.5);
    let mut y = x;
    let tmp = x + T::lit(5.242_187_5);
    let tmp = (x + half) * tmp.ln() - tmp;
    let mut ser = T::lit(0.999_999_999_999_997_092);
    for c in LANCZOS {
        y = y + T::one();
        ser = ser + T::lit(c) / y;
    }
    tmp + (T::lit(2.506_628_274_631_000_5) * ser / x).ln()
}

/// `ln Γ(x)` with domain checking.
pub fn log_gamma<T: Real>(x: T) -> Result<T> {
    if !(x > T::zero()) || !x.is_finite() {
        return Err(Error::Domain(format!(
            "log_gamma requires a finite positive argument, got {x}"
        )));
    }
    Ok(ln_gamma(x))
}

/// `Γ(x)` for `x > 0` (overflows to +inf beyond ~171.6).
pub fn gamma<T: Real>(x: T) -> T {
    ln_gamma(x).exp()
}

/// `ln B(a, b)`.
pub fn ln_beta<T: Real>(a: T, b: T) -> T {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// Ratio `Γ(a)/Γ(b)` evaluated in log space.
pub fn gamma_ratio<T: Real>(a: T, b: T) -> T {
    (ln_gamma(a) - ln_gamma(b)).exp()
}

fn tiny<T: Real>() -> T {
    T::min_positive_value() / T::epsilon()
}

/// Continued fraction for the incomplete beta function (modified Lentz).
fn beta_cf<T: Real>(a: T, b: T, x: T) -> T {
    let one = T::one();
    let two = T::lit(2.0);
    let eps = T::epsilon();
    let fpmin = tiny::<T>();
    let qab = a + b;
    let qap = a + one;
    let qam = a - one;
    let mut c = one;
    let mut d = one - qab * x / qap;
    if d.abs() < fpmin {
        d = fpmin;
    }
    d = d.recip();
    let mut h = d;
    for m in 1..MAX_ITER {
        let m = T::from_usize_lossy(m);
        let m2 = two * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = one + aa * d;
        if d.abs() < fpmin {
            d = fpmin;
        }
        c = one + aa / c;
        if c.abs() < fpmin {
            c = fpmin;
        }
        d = d.recip();
        h = h * d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = one + aa * d;
        if d.abs() < fpmin {
            d = fpmin;
        }
        c = one + aa / c;
        if c.abs() < fpmin {
            c = fpmin;
        }
        d = d.recip();
        let del = d * c;
        h = h * del;
        if (del - one).abs() <= eps {
            break;
        }
    }
    h
}

/// Regularized incomplete beta `I_x(a, b)` together with its complement
/// `1 − I_x(a, b)`, each computed without cancellation on its own side.
pub fn beta_reg_pair<T: Real>(a: T, b: T, x: T) -> (T, T) {
    let one = T::one();
    if x <= T::zero() {
        return (T::zero(), one);
    }
    if x >= one {
        return (one, T::zero());
    }
    let ln_front = a * x.ln() + b * (-x).ln_1p() - ln_beta(a, b);
    let front = ln_front.exp();
    if x < (a + one) / (a + b + T::lit(2.0)) {
        let lower = front * beta_cf(a, b, x) / a;
        (lower, one - lower)
    } else {
        let upper = front * beta_cf(b, a, one - x) / b;
        (one - upper, upper)
    }
}

/// Regularized incomplete beta `I_x(a, b)`.
pub fn beta_reg<T: Real>(a: T, b: T, x: T) -> T {
    beta_reg_pair(a, b, x).0
}

/// Regularized lower and upper incomplete gamma `(P(a, x), Q(a, x))`.
pub fn gamma_reg_pair<T: Real>(a: T, x: T) -> (T, T) {
    let one = T::one();
    if x <= T::zero() {
        return (T::zero(), one);
    }
    let eps = T::epsilon();
    let ln_front = -x + a * x.ln() - ln_gamma(a);
    if x < a + one {
        let mut ap = a;
        let mut del = a.recip();
        let mut sum = del;
        for _ in 0..MAX_ITER {
            ap = ap + one;
            del = del * x / ap;
            sum = sum + del;
            if del.abs() < sum.abs() * eps {
                break;
            }
        }
        let p = sum * ln_front.exp();
        (p, one - p)
    } else {
        let fpmin = tiny::<T>();
        let mut b = x + one - a;
        let mut c = fpmin.recip();
        let mut d = b.recip();
        let mut h = d;
        for i in 1..MAX_ITER {
            let i = T::from_usize_lossy(i);
            let an = -i * (i - a);
            b = b + T::lit(2.0);
            d = an * d + b;
            if d.abs() < fpmin {
                d = fpmin;
            }
            c = b + an / c;
            if c.abs() < fpmin {
                c = fpmin;
            }
            d = d.recip();
            let del = d * c;
            h = h * del;
            if (del - one).abs() <= eps {
                break;
            }
        }
        let q = ln_front.exp() * h;
        (one - q, q)
    }
}

/// Regularized lower incomplete gamma `P(a, x)`.
pub fn gamma_p<T: Real>(a: T, x: T) -> T {
    gamma_reg_pair(a, x).0
}

/// Complementary error function.
pub fn erfc<T: Real>(x: T) -> T {
    if x.is_nan() {
        return x;
    }
    let half = T::lit(0.5);
    if x >= T::zero() {
        gamma_reg_pair(half, x * x).1
    } else {
        T::lit(2.0) - gamma_reg_pair(half, x * x).1
    }
}

/// Standard normal CDF.
pub fn normal_cdf<T: Real>(z: T) -> T {
    T::lit(0.5) * erfc(-z / T::SQRT_2())
}
