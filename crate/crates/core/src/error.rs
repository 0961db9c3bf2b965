use thiserror::Error;

/// Errors raised across the toolkit.
#[derive(Debug, Error)]
pub enum LfppError {
    /// A query or input fell outside the domain an operation is defined on.
    #[error("domain error: {0}")]
    Domain(String),
    /// Inconsistent or invalid parameters.
    #[error("config error: {0}")]
    Config(String),
    /// The requested geometry exceeds what a backend can hold.
    #[error("capacity error: {what} exceeds the limit of {limit}")]
    Capacity { what: String, limit: usize },
    /// A search along a path came up empty (a legal outcome for some callers).
    #[error("not found: {0}")]
    NotFound(String),
    /// A numerical routine broke an internal guarantee.
    #[error("internal error: {0}")]
    Internal(String),
    /// Malformed file contents.
    #[error("format error: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = LfppError> = std::result::Result<T, E>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(LfppError::Domain(msg.into()))
}

pub(crate) fn config<T>(msg: impl Into<String>) -> Result<T> {
    Err(LfppError::Config(msg.into()))
}
