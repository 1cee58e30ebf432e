//! Error type shared across the crate.

use thiserror::Error;

/// Errors produced by solvers, profile construction, and analysis.
#[derive(Debug, Error)]
pub enum FlameError {
    /// A parameter violated its documented range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A sample point fell outside the grid's domain square.
    #[error("point ({x}, {y}) outside domain of half-width {half_width}")]
    OutOfDomain { x: f64, y: f64, half_width: f64 },

    /// A solver or run configuration is inconsistent.
    #[error("configuration error: {0}")]
    Config(String),

    /// Profile integration found no zero of f before the search cap.
    #[error("self-similar profile not found for n={dimension}: no sign change before r={search_cap}")]
    ProfileNotFound { dimension: usize, search_cap: f64 },

    /// An estimator was asked for a quantity the data cannot support.
    #[error("estimation error: {0}")]
    Estimation(String),

    /// The grid is too coarse for the requested diagnostic.
    #[error("insufficient resolution: {0}")]
    InsufficientResolution(String),

    /// A snapshot file did not match the expected layout.
    #[error("snapshot format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, FlameError>;
