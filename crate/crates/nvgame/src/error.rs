use std::path::PathBuf;

use thiserror::Error;

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const INPUT: i32 = 2;
    pub const SOLVER: i32 = 3;
    pub const MODEL: i32 = 4;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    /// Malformed or invalid file content.
    #[error("{location}: {message}")]
    Parse { location: String, message: String },
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Model(#[from] nvgame_core::Error),
    #[error("writing output: {0}")]
    Output(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use nvgame_core::Error as E;
        match self {
            CliError::Io { .. } | CliError::Parse { .. } | CliError::Usage(_) => exit::INPUT,
            CliError::Model(E::Input(_) | E::Capacity { .. } | E::Domain { .. }) => exit::INPUT,
            CliError::Model(E::GameInvalid(_)) => exit::MODEL,
            CliError::Model(_) | CliError::Output(_) => exit::SOLVER,
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        match e.into_kind() {
            csv::ErrorKind::Io(e) => CliError::Output(e),
            other => CliError::Output(std::io::Error::other(format!("{other:?}"))),
        }
    }
}
