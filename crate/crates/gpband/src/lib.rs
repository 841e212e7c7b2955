//! Gaussian-process regression on [0, 1] with pointwise credible intervals,
//! simultaneous credible bands, and a replication harness that measures their
//! frequentist coverage against the population-level predictions.
//!
//! The crate is organized around the pipeline
//!
//! * [`kernels`] — Matern and truncated spectral kernels plus Gram assembly,
//! * [`spectral`] — equivalent-kernel eigenweights, smoothing/residual
//!   operators, population covariances, and rate diagnostics,
//! * [`posterior`] — the fitted posterior (mean, covariance, grid
//!   restriction, sampling),
//! * [`credible`] — intervals, sup-norm bands, and band-coverage limits,
//! * [`sim`] — data generation and replicated coverage experiments,
//! * [`cli`] — config handling and the batch subcommands.

pub mod cli;
pub mod credible;
pub mod error;
pub mod kernels;
pub mod linalg;
pub mod posterior;
pub mod rng;
pub mod sim;
pub mod spectral;
pub mod stats;

pub use error::{Error, Result};
