//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A datapoint sits on (or within `tol` of) a ReLU activation boundary,
    /// so the loss is not differentiable there and spectral machinery must
    /// refuse; the exact per-case certifier handles these points instead.
    #[error("non-smooth point: datapoint {point} lies within {tol:e} of the activation boundary of unit {unit}")]
    NonSmooth { point: usize, unit: usize, tol: f64 },

    #[error("dataset is not decent: every input-group label mean equals the global label mean")]
    NotDecent,

    #[error("architecture error: {0}")]
    Architecture(String),

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
