//! Crate error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Sampling periods of two objects that must agree do not.
    #[error("sampling period mismatch: {left} vs {right}")]
    TsMismatch { left: f64, right: f64 },

    /// Matrix/vector/signal dimensions are inconsistent.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// An argument is outside its mathematical domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// Non-finite values or a failed factorization/eigendecomposition.
    #[error("numeric failure: {0}")]
    NumericFailure(String),

    /// A discrete transfer function required to be stable is not.
    #[error("unstable system: spectral radius {spectral_radius}")]
    Unstable { spectral_radius: f64 },

    /// Closed loop with feedthrough on both plant and controller.
    #[error("algebraic loop: {0}")]
    AlgebraicLoop(String),

    /// Malformed input file (data CSV, controller file, config).
    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn dim(msg: impl Into<String>) -> Self {
        Error::DimensionMismatch(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn numeric(msg: impl Into<String>) -> Self {
        Error::NumericFailure(msg.into())
    }
}
