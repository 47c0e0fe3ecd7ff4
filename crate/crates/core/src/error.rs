use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{path}: line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("matrix is not symmetric (max relative asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("eigensolver did not converge")]
    EigenNotConverged,

    #[error("zero eigenvalue multiplicity {0}: graph is disconnected")]
    Disconnected(usize),

    #[error("singular linear system: {0}")]
    Singular(&'static str),

    #[error("duplicate constraint at node {0}")]
    DuplicateConstraint(usize),

    #[error("constraints {first} and {second} snap to the same grid node")]
    SnapCollision { first: usize, second: usize },

    #[error("no ill-posed shoulder in range")]
    NoShoulder,

    #[error("no connected instances")]
    NoConnectedInstances,

    #[error("cache: {0}")]
    Cache(String),

    #[error("config: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures caused by the numerics rather than by bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::EigenNotConverged
                | Error::Disconnected(_)
                | Error::Singular(_)
                | Error::NoShoulder
                | Error::NoConnectedInstances
        )
    }
}
