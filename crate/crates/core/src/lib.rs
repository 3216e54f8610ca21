//! Numerical laboratory for the time-fractional semilinear heat equation
//! `∂_t^α u - Δu = u^p` with measure-like initial data.

pub mod config;
pub mod criteria;
pub mod datum;
pub mod error;
pub mod experiments;
pub mod quad;
pub mod propagator;
pub mod solver;
pub mod specfun;

pub use error::{Error, Result};
