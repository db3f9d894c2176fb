//! Perfect simulation of Gibbs point processes with exponentially localized
//! potentials, stabilizing geometric functionals on the samples, and Monte
//! Carlo estimators for their limit theory.
//!
//! The numerical core is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix `f64`, which every estimator and experiment uses.

pub mod error;
pub mod estimators;
pub mod functionals;
pub mod geometry;
pub mod potentials;
pub mod rng;
pub mod sampler;
pub mod scalar;
pub mod stats;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Point64 = geometry::Point<f64>;
pub type Point32 = geometry::Point<f32>;
pub type Configuration64 = geometry::PointConfiguration<f64>;
pub type Configuration32 = geometry::PointConfiguration<f32>;
pub type Window64 = geometry::Window<f64>;
