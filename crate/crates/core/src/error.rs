use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("resource limit: {0}")]
    ResourceLimit(String),

    #[error("invalid mode: {0}")]
    InvalidMode(String),

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    /// The LP optimum landed strictly between the two admissible values.
    #[error("ambiguous LP optimum {optimum:e} (tolerance {tol:e})")]
    Ambiguous { optimum: f64, tol: f64 },

    #[error("unsupported dimension: {0}")]
    UnsupportedDimension(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by floating-point trouble rather than bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::NumericalFailure(_) | Error::Ambiguous { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
