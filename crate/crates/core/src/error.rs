use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid range: lo = {lo}, hi = {hi}")]
    InvalidRange { lo: f64, hi: f64 },

    #[error("invalid label {label} (expected 1..={max})")]
    InvalidLabel { label: u32, max: u32 },

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("format error in {path}: {reason}")]
    Format { path: PathBuf, reason: String },

    #[error("undefined metric: {0}")]
    UndefinedMetric(&'static str),

    #[error("non-finite loss at epoch {epoch} (last finite epoch: {last_good:?})")]
    Diverged { epoch: usize, last_good: Option<usize> },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, reason: impl Into<String>) -> Self {
        Error::Format { path: path.into(), reason: reason.into() }
    }
}
