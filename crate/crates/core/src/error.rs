use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the clustering toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("malformed file {path}: {reason}")]
    Format { path: PathBuf, reason: String },
    #[error("row-count mismatch: view {view} has {found} rows, expected {expected}")]
    RowCountMismatch {
        view: usize,
        expected: usize,
        found: usize,
    },
    #[error("non-finite value (NaN or Inf) detected in {what} at row {row}, column {col}")]
    NonFinite {
        what: String,
        row: usize,
        col: usize,
    },
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimMismatch { expected: usize, found: usize },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("memory guard: {n}x{n} dense matrix needs {needed} bytes, budget is {budget} bytes")]
    MemoryGuard { n: usize, needed: u128, budget: u128 },
    #[error("numeric failure: {0}")]
    Numeric(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, reason: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    /// Process exit code: 3 for the memory guard, 4 for numeric failures,
    /// 2 for everything else (bad configuration or input).
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::MemoryGuard { .. } => 3,
            Error::Numeric(_) | Error::NonFinite { .. } => 4,
            _ => 2,
        }
    }
}
