//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by validation, geometry, and numerical routines.
#[derive(Debug, Error)]
pub enum Error {
    /// A point or polynomial had the wrong ambient dimension.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// Text input failed to parse; the offending token is quoted.
    #[error("parse error at `{token}`: {reason}")]
    Parse { token: String, reason: String },

    /// A base point was required to lie on the variety but does not.
    #[error("point is not on the variety: |p(t)| = {value:.3e}")]
    NotOnVariety { value: f64 },

    /// The gradient bound degenerated, so no distance bound exists.
    #[error("gradient bound is zero over the region; no distance bound")]
    ZeroGradientBound,

    /// An operation that needs a nonempty point cloud received an empty one.
    #[error("empty point cloud: {0}")]
    EmptyCloud(&'static str),

    /// Input validation failed (bad configuration, inconsistent data).
    #[error("invalid input: {0}")]
    Validation(String),

    /// Geometry construction failed (meshing, projection, clipping).
    #[error("meshing failure: {0}")]
    Meshing(String),

    /// An iterative numerical method failed to converge.
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    /// Shorthand for a validation error with a formatted message.
    pub fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }
}
