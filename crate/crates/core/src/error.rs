use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Coarse classification used by front-ends to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Bad arguments or an unsatisfiable configuration.
    Config,
    /// Malformed, inconsistent or insufficient input data.
    Data,
    /// The numerics failed (non-convergence, badly negative spectrum).
    Numeric,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{context}: {message}")]
    Format { context: String, message: String },

    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: String,
        expected: usize,
        found: usize,
    },

    #[error("{context}: row {row} has a non-finite value in column {column}")]
    NonFinite {
        context: String,
        row: usize,
        column: usize,
    },

    #[error("duplicate image key {key:?} in dataset {dataset:?}")]
    DuplicateKey { dataset: String, key: String },

    #[error("{0}: no records")]
    NoRecords(String),

    #[error("{what} needs at least {needed} samples, got {got}")]
    InsufficientSamples {
        what: String,
        needed: u64,
        got: u64,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(
        "symmetric eigendecomposition of a {dim}x{dim} matrix did not converge after {iterations} \
         iterations (max |entry| {max_abs:e}, diagonal range [{min_diag:e}, {max_diag:e}])"
    )]
    EigenNoConvergence {
        dim: usize,
        iterations: usize,
        max_abs: f64,
        min_diag: f64,
        max_diag: f64,
    },

    #[error("numeric failure: {0}")]
    Numeric(String),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::InvalidArgument(_) => ErrorKind::Config,
            Error::EigenNoConvergence { .. } | Error::Numeric(_) => ErrorKind::Numeric,
            _ => ErrorKind::Data,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(context: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Format {
            context: context.into(),
            message: message.into(),
        }
    }
}
