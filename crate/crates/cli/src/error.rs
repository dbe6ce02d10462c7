use std::io;

use thiserror::Error;

/// Failures surfaced by the command-line front end.
#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] compsketch::Error),

    #[error("{0}")]
    Usage(String),

    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },

    #[error("{path}: {message}")]
    Parse { path: String, message: String },

    #[error("{0}")]
    Incompatible(String),

    #[error("{0}")]
    Sealed(String),
}

pub type CliResult<T> = std::result::Result<T, CliError>;

pub mod exit {
    pub const OK: i32 = 0;
    pub const USAGE: i32 = 2;
    pub const FORMAT: i32 = 3;
    pub const INCOMPATIBLE: i32 = 4;
    pub const SEALED: i32 = 5;
    pub const NUMERICAL: i32 = 6;
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use compsketch::Error as E;
        match self {
            CliError::Core(e) => match e {
                E::Format(_) | E::RowDimension { .. } => exit::FORMAT,
                E::IncompatibleSketch | E::UnsupportedKind { .. } | E::DimensionMismatch { .. } => {
                    exit::INCOMPATIBLE
                }
                E::SealedSketch => exit::SEALED,
                E::IllConditioned { .. } | E::Numerical(_) | E::Infeasible(_) | E::CountOverflow => {
                    exit::NUMERICAL
                }
                E::InvalidArgument(_) | E::EmptySketch => exit::USAGE,
            },
            CliError::Usage(_) | CliError::Config { .. } => exit::USAGE,
            CliError::Io { source, .. } if source.kind() == io::ErrorKind::NotFound => exit::USAGE,
            CliError::Io { .. } | CliError::Parse { .. } => exit::FORMAT,
            CliError::Incompatible(_) => exit::INCOMPATIBLE,
            CliError::Sealed(_) => exit::SEALED,
        }
    }
}

pub(crate) fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

pub(crate) fn io_err(path: impl AsRef<std::path::Path>) -> impl FnOnce(io::Error) -> CliError {
    let path = path.as_ref().display().to_string();
    move |source| CliError::Io { path, source }
}
