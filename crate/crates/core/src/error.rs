use thiserror::Error;

use crate::sampler::ChainRun;

/// Errors produced anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied value violates a documented precondition.
    #[error("parameter error: {0}")]
    Parameter(String),

    /// The requested operation is not supported for this model or potential.
    #[error("capability error: {0}")]
    Capability(String),

    /// An iterative method failed to reach its tolerance.
    #[error("numeric error after {iterations} iterations: {message}")]
    Numeric {
        message: String,
        iterations: usize,
        /// Best iterate reached before giving up, when one exists.
        best: Option<Vec<f64>>,
    },

    /// A chain left the finite region. The partial run is kept for diagnostics.
    #[error("chain diverged at step {step}: {reason}")]
    Divergence {
        step: usize,
        reason: String,
        partial: Box<ChainRun>,
    },

    /// An experiment-level failure (for example too many diverged replicates).
    #[error("experiment error: {0}")]
    Experiment(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn param<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Parameter(msg.into()))
}
