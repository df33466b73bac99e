//! Error type shared by the whole crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: String, got: String },

    #[error("matrix is numerically rank deficient: smallest singular value {min_singular:.3e}")]
    RankDeficient { min_singular: f64 },

    #[error("point is not on the Stiefel manifold: ||X'X - I||_F = {error:.3e}")]
    NotOnManifold { error: f64 },

    #[error("feasibility lost at iteration {iteration}: ||X'X - I||_F = {error:.3e}")]
    FeasibilityLost { iteration: usize, error: f64 },

    #[error("invalid metric: {0}")]
    InvalidMetric(String),

    #[error("objective history is empty")]
    EmptyHistory,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("internal error: {0}")]
    Internal(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn shape(expected: impl Into<String>, got: impl Into<String>) -> Self {
        Error::DimensionMismatch {
            expected: expected.into(),
            got: got.into(),
        }
    }
}
