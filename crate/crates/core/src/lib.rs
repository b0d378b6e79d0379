//! Toolkit for certifying, reproducing and constructing suboptimal local
//! minima of tiny neural networks.
//!
//! The crate provides:
//!
//! - [`tinynet`]: three small architectures (a 2-2-1 sigmoid classifier, a
//!   single-hidden-layer ReLU regressor, a 2-h-1 classifier) plus a deep
//!   ReLU regression stack, with losses, exact analytic gradients and a
//!   finite-difference Hessian assembled from the analytic gradient.
//! - [`datasets`]: the canonical datasets the certified points live on, a
//!   JSON interchange format, and the "decent dataset" predicate.
//! - [`certify`]: a cyclic-Jacobi symmetric eigensolver, spectral
//!   critical-point classification, and an exact per-activation-case
//!   certifier for ReLU regression minima that sit on activation kinks.
//! - [`optim`]: full-batch gradient descent and Adam, the seeded training
//!   harness behind the convergence-rate table, and a grid sampler.
//! - [`forge`]: data-space gradient descent that minimizes the weight-space
//!   gradient norm at a fixed parameter point, turning that point into a
//!   critical point of the error surface.
//! - [`blindspot`]: saturation (blind-spot) detection, the constant-output
//!   training probes, and the constructive better-than-mean solution for
//!   decent datasets.
//! - [`cli`]: the batch command-line frontend (`verify`, `certify`,
//!   `table1`, `forge`, `sample-grid`, `dataset`).
//!
//! All numeric work is in `f64`. Every randomized component takes an
//! explicit seed and draws from the documented [`rng::SplitMix64`] stream,
//! so results are bit-reproducible across runs and thread counts.

pub mod blindspot;
pub mod certify;
pub mod cli;
pub mod datasets;
pub mod error;
pub mod forge;
pub mod optim;
pub mod rng;
pub mod tinynet;

pub use error::{Error, Result};
