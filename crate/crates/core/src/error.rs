use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A candump line could not be parsed.
    #[error("{message} at byte {offset} in line {line:?}")]
    Line {
        line: String,
        offset: usize,
        message: String,
    },

    /// A CSV row could not be parsed. Rows are numbered from 1, excluding the header.
    #[error("row {row}: {message}")]
    Row { row: usize, message: String },

    /// A configuration line could not be parsed. Lines are numbered from 1.
    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("infeasible problem: {0}")]
    Infeasible(String),

    #[error("solver did not converge after {iterations} iterations (best KKT residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
