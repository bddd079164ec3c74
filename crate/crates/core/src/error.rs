use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A configuration value is inconsistent or out of range.
    #[error("configuration error: {0}")]
    Config(String),

    /// An operation was called with parameters outside its domain.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// The scene violates a geometric invariant.
    #[error("invalid scene: {0}")]
    Scene(String),

    /// A caller broke an operation's contract (e.g. querying an unpulled arm).
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("failed to parse config {path}: {message}")]
    ConfigParse { path: PathBuf, message: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("CSV error on {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub(crate) fn scene(msg: impl Into<String>) -> Self {
        Error::Scene(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
