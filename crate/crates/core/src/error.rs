use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the library. The variants map onto the CLI exit codes:
/// config problems, missing upstream artifacts, and bad data.
#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Config(String),
    #[error("missing {what} artifact: {path}")]
    MissingArtifact { what: String, path: PathBuf },
    #[error("{0}")]
    Data(String),
    #[error("line {line}: {reason}")]
    Malformed { line: u64, reason: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn data(msg: impl Into<String>) -> Self {
        Error::Data(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
