//! Error types shared across the crate.

use thiserror::Error;

/// Errors produced by signal processing, identification, and learning routines.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid configuration value (bad parameter, dimension mismatch, ...).
    #[error("configuration error: {0}")]
    Config(String),

    /// Malformed or degenerate input data.
    #[error("input error: {0}")]
    Input(String),

    /// A matrix or normal-equation system was numerically singular.
    #[error("singular system: {0}")]
    Singular(String),

    /// The adaptive learning loop diverged.
    #[error("learning diverged at iteration {iteration}: residual correlation grew for 3 consecutive iterations; try a smaller step size (mu = {mu})")]
    Divergence { iteration: usize, mu: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
