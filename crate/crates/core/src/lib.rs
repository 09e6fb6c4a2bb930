//! Statistics, estimation and optimization for multi-antenna uplinks over
//! non-stationary Rician aging channels.
//!
//! The crate is `no_std` (it needs `alloc`). Everything here is a pure
//! function of its inputs; IO, configuration files and parallel drivers live
//! in the `aging` companion crate.
//!
//! Module map:
//!
//! - [`corrmodel`]: temporal/spatial correlations, covariance sets, AR(1)
//!   transition and innovation covariances, LoS means.
//! - [`layout`]: multi-frame pilot/data structure and power splitting.
//! - [`channelsim`]: seeded trajectory and observation generation.
//! - [`estimator`]: LMMSE channel estimation from neighbouring pilots.
//! - [`receiver`]: conditional moments, MMSE combiner, instantaneous SINR/SE.
//! - [`model`]: per-slot powers, kernels and conditional moments of a layout.
//! - [`deteq`]: deterministic-equivalent SE fixed point and the ASE objective.
//! - [`optimizer`]: exhaustive frame enumeration with projected-gradient power
//!   control.
#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod channelsim;
pub mod corrmodel;
pub mod deteq;
pub mod error;
pub mod estimator;
pub mod layout;
pub mod linalg;
pub mod model;
pub mod montecarlo;
pub mod optimizer;
pub mod receiver;
pub mod scenario;
pub mod schedule;
pub mod special;

#[cfg(test)]
mod testutil;

pub use error::{Error, Result};

/// Complex double.
pub type C64 = num_complex::Complex<f64>;
/// Dense complex matrix.
pub type CMat = nalgebra::DMatrix<C64>;
/// Dense complex column vector.
pub type CVec = nalgebra::DVector<C64>;
