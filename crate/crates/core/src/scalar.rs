//! Floating-point abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Real scalar: `f32` or `f64`.
///
/// All analytic routines (special functions, quadrature, Weyl operators,
/// the forward and inverse beta-scaling maps) are written against this trait.
/// Monte Carlo engines work in `f64`.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal, panicking only on non-representable input
    /// (never the case for the constants used in this crate).
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("f64 literal representable")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).unwrap_or_else(Self::infinity)
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Relative tolerance used when a caller does not supply one.
    #[inline]
    fn default_rel_tol() -> Self {
        (Self::epsilon() * Self::lit(1e4)).max(Self::lit(1e-12))
    }
}

impl<T> Real for T where
    T: Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_tolerance_tracks_precision() {
        assert!(f64::default_rel_tol() < 1e-11);
        assert!(f32::default_rel_tol() > 1e-4);
    }
}
