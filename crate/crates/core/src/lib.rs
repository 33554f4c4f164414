//! Recursive system identification for linear AR models with skew-normal
//! innovations.
//!
//! The crate provides:
//!
//! - [`skew_normal`]: the innovation distribution (density, moments,
//!   sampling);
//! - [`mvniw`]: the matrix-variate-normal--inverse-Wishart posterior over
//!   the innovation scale and skewness, with closed-form moments and the
//!   forgetting-factor time update;
//! - [`truncation`]: sequential moment matching for orthant-truncated
//!   normals;
//! - [`identifier`]: the recursive variational-Bayes identifier;
//! - [`baseline`]: the Gaussian-innovation comparison filter;
//! - [`sim`] and [`harness`]: synthetic data generation and the seeded
//!   Monte Carlo benchmark comparing both methods;
//! - [`snapshot`]: versioned text checkpoints of filter states.
//!
//! With the default `parallel` feature the benchmark runs replications on
//! a rayon pool; disabling it falls back to a sequential loop with
//! bit-identical results.

pub mod baseline;
pub mod error;
pub mod gauss;
pub mod harness;
pub mod identifier;
pub mod linalg;
pub mod mvniw;
pub mod sim;
pub mod skew_normal;
pub mod snapshot;
pub mod truncation;

pub use error::{Error, Result};
