use std::path::PathBuf;

use aperiodic_spectrum::Error as CoreError;

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RESOLUTION: i32 = 3;
pub const EXIT_NUMERIC: i32 = 4;
pub const EXIT_IO: i32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] CoreError),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        Self::Config(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io { path: path.into(), source }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => EXIT_CONFIG,
            Self::Io { .. } => EXIT_IO,
            Self::Core(e) => match e {
                CoreError::GridTooCoarse { .. } | CoreError::InsufficientResolution(_) => EXIT_RESOLUTION,
                CoreError::NonFiniteEnergy(_) | CoreError::OutOfRange { .. } | CoreError::EmptyWord => EXIT_NUMERIC,
                _ => EXIT_CONFIG,
            },
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
