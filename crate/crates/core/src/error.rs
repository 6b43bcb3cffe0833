use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("instance {hit_id}: {message}")]
    Validation { hit_id: String, message: String },

    #[error("{0}")]
    Invalid(String),

    #[error("embedding file line {line}: {message}")]
    Embedding { line: usize, message: String },

    #[error("under-determined fit: {usable} usable dictionary pairs, need at least {required}")]
    UnderDetermined { usable: usize, required: usize },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("stale activation cache: computed for model generation {cached}, model is at {current}")]
    StaleCache { cached: u64, current: u64 },

    #[error("missing resource: {what} ({path})")]
    Missing { what: String, path: PathBuf },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: {source}", path.display())]
    InFile {
        path: PathBuf,
        #[source]
        source: Box<Error>,
    },

    #[error("{context}: {source}")]
    Json {
        context: String,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn missing(what: impl Into<String>, path: impl Into<PathBuf>) -> Self {
        Error::Missing {
            what: what.into(),
            path: path.into(),
        }
    }

    /// Attaches the file the error came from.
    pub fn in_file(self, path: impl Into<PathBuf>) -> Self {
        match self {
            e @ (Error::Io { .. } | Error::InFile { .. } | Error::Missing { .. }) => e,
            e => Error::InFile {
                path: path.into(),
                source: Box::new(e),
            },
        }
    }

    /// Process exit code for the command line front end.
    ///
    /// 1 for validation and parse failures, 2 for missing inputs,
    /// 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Missing { .. } => 2,
            Error::Io { source, .. } if source.kind() == std::io::ErrorKind::NotFound => 2,
            Error::Numerical(_) | Error::UnderDetermined { .. } => 3,
            Error::InFile { source, .. } => source.exit_code(),
            _ => 1,
        }
    }
}
