use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A formula was evaluated outside the set where it is defined.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("parameter out of range: {0}")]
    Range(String),

    #[error("no weak core: n*f(0) = {0} does not exceed 1")]
    NoCore(f64),

    /// Raised instead of silently truncating a combinatorial enumeration.
    #[error("capacity exceeded while enumerating {what}: more than {cap} candidate subsets")]
    Capacity { what: &'static str, cap: u64 },

    #[error("degenerate regime: {0}")]
    DegenerateRegime(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

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

    /// Process exit code used by the command line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Capacity { .. } => 3,
            Error::Io { .. } => 4,
            _ => 2,
        }
    }
}
