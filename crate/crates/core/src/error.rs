use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("i/o failure: {0}")]
    Write(#[from] std::io::Error),

    #[error("malformed input {path}: {reason}")]
    Format { path: PathBuf, reason: String },

    #[error("dataset `{0}` contains no geometries")]
    EmptyDataset(&'static str),

    #[error("degenerate geometry {id}: {reason}")]
    DegenerateGeometry { id: u32, reason: &'static str },

    #[error("oracle refused {pairs} pairs (cap {cap})")]
    CapExceeded { pairs: u64, cap: u64 },

    #[error(
        "{algorithm} keeps both datasets in memory; target needs ~{needed} bytes but the budget is {budget} bytes"
    )]
    OutOfMemory {
        algorithm: String,
        needed: u64,
        budget: u64,
    },

    #[error("worker panicked while joining partition {partition}")]
    WorkerPanic { partition: usize },

    #[error("invalid configuration: {0}")]
    Config(String),
}

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

    /// `true` for errors caused by user-supplied configuration rather than a failed run.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config(_) | Error::CapExceeded { .. })
    }
}
