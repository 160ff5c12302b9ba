use std::path::Path;

use ecodrive_core::error::RouteError;
use ecodrive_core::ParamError;

/// Errors of the harness, each mapped to a process exit code.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{0}")]
    Usage(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Param(#[from] ParamError),
    #[error(transparent)]
    Route(#[from] RouteError),
    #[error("{0}")]
    Mismatch(String),
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("{}: {inner}", path.display())]
    InFile { path: std::path::PathBuf, inner: Box<Error> },
    #[error(transparent)]
    Io(#[from] anyhow::Error),
}

impl Error {
    pub fn in_file(self, path: &Path) -> Self {
        Error::InFile {
            path: path.to_path_buf(),
            inner: Box::new(self),
        }
    }

    /// 1 usage, 2 validation (including unreadable input), 3 infeasible.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) => 1,
            Error::Infeasible(_) => 3,
            Error::InFile { inner, .. } => inner.exit_code(),
            _ => 2,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.into())
    }
}
