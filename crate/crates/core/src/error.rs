use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the library.
///
/// Every variant except [`Error::Io`] and [`Error::Internal`] describes a
/// problem with the caller's input; the CLI maps those to exit code 2.
#[derive(Debug, Error)]
pub enum Error {
    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("dimension mismatch: point {index} has {found} coordinates, expected {expected}")]
    DimensionMismatch {
        index: usize,
        expected: usize,
        found: usize,
    },

    #[error("point index {index} out of range for {n} points")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("invalid edge {u}-{v}: {reason}")]
    InvalidEdge { u: usize, v: usize, reason: String },

    #[error("graph is disconnected: vertex {from} cannot reach vertex {to}")]
    Disconnected { from: usize, to: usize },

    #[error("invalid distance matrix: {0}")]
    InvalidMatrix(String),

    #[error("k = {k} out of range for {n} points")]
    KOutOfRange { k: usize, n: usize },

    #[error("duplicate center {0}")]
    DuplicateCenter(usize),

    #[error("instance too large for exhaustive search: C({n}, {k}) exceeds {limit}")]
    TooLarge { n: usize, k: usize, limit: u64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("inconsistent base clustering: {0}")]
    InconsistentClustering(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("internal error: {0}")]
    Internal(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Whether the error stems from bad user input rather than an internal failure.
    pub fn is_input_error(&self) -> bool {
        !matches!(self, Error::Internal(_))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
