use std::path::PathBuf;

use crate::config::ConfigError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        source: csv::Error,
    },

    #[error("{path}: {source}")]
    Checkpoint {
        path: PathBuf,
        source: sgrpo_core::Error,
    },

    #[error("non-finite {what} at step {step}; advantage bundle written to {}", dump.display())]
    NonFinite {
        step: usize,
        what: &'static str,
        dump: PathBuf,
    },

    #[error(transparent)]
    Core(#[from] sgrpo_core::Error),

    #[error("{0}")]
    Usage(String),

    #[error("{0}")]
    Input(String),
}

impl CliError {
    /// Process exit status: 2 for usage errors, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) => 2,
            _ => 1,
        }
    }
}

pub fn io_err(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> CliError {
    let path = path.into();
    move |source| CliError::Io { path, source }
}

pub type Result<T> = std::result::Result<T, CliError>;
