use std::path::PathBuf;

use thiserror::Error;

use crate::graphability::GraphabilityReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("validation error: {0}")]
    Validation(String),

    #[error("sequences for step {step} are not graphable: {report}")]
    Graphability {
        step: usize,
        report: GraphabilityReport,
    },

    #[error("wiring failed: {0}")]
    Wiring(String),

    #[error("lattice has more than {cap} points")]
    EnumerationOverflow { cap: u64 },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Process exit code used by the command line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Validation(_) | Error::EnumerationOverflow { .. } => 2,
            Error::Graphability { .. } => 3,
            Error::Wiring(_) => 4,
            Error::Io { .. } => 5,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
