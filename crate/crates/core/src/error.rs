//! Crate-wide error type.

use thiserror::Error;

/// Errors surfaced by the benchmark core.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument violated a precondition (non-finite value, bad shape
    /// parameter, out-of-range index, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Procedural generation could not produce a feasible world within the
    /// retry budget.
    #[error("generation failed: {0}")]
    Generation(String),

    /// A serialized file did not match its expected format or version.
    #[error("format error: {0}")]
    Format(String),

    /// Tensor/layer shape mismatch; names the offending layer and shapes.
    #[error("shape mismatch in {layer}: expected {expected}, got {got}")]
    Shape {
        layer: String,
        expected: String,
        got: String,
    },

    /// An operation was called out of order (e.g. backward before forward).
    #[error("state error: {0}")]
    State(String),

    /// A NaN or infinity appeared where finite arithmetic was required.
    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }
}
