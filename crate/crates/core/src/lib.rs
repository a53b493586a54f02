pub mod dist;
pub mod error;
pub mod evt;
pub mod grid;
pub mod quad;
pub mod sample;
pub mod scalar;
pub mod scaling;
pub mod special;
pub mod tail;
pub mod verify;
pub mod weyl;

pub use dist::{
    Beta, BetaParams, DistRef, EmpiricalDist, Gamma, GridDist, LogNormal, PointMass, PowerFamily, PowerKind, PowerOf,
    ProductDist, ReciprocalWeibull, ScalarDist, Uniform,
};
pub use error::{Error, Result};
pub use grid::{empirical_cdf, Extrapolation, GridFn, GridSpec, Interpolation, Spacing, TailRule};
pub use scalar::Real;

pub type GridFn64 = GridFn<f64>;
pub type GridSpec64 = GridSpec<f64>;
pub type BetaParams64 = BetaParams<f64>;
pub type DistRef64 = DistRef<f64>;
