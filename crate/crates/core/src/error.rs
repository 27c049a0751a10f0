use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument outside the accepted domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A malformed pattern file or scenario; `row` is 1-based over data rows.
    #[error("parse error at row {row}: {message}")]
    Parse { row: usize, message: String },

    /// Incompatible matrix or vector shapes.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// A linear system that could not be solved, typically a covariance
    /// estimated from too few samples.
    #[error("singular system: {0}")]
    Singular(String),

    #[error("insufficient samples: need {needed}, have {available}")]
    InsufficientSamples { needed: usize, available: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
