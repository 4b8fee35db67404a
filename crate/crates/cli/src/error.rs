use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("chain diverged at iteration {iter}; partial outputs were written")]
    Diverged { iter: usize },
    #[error(transparent)]
    Core(sgbd::Error),
}

impl CliError {
    /// Process exit code: 2 for config errors, 3 for divergence, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Diverged { .. } => 3,
            _ => 1,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    pub(crate) fn csv(path: impl Into<PathBuf>, source: csv::Error) -> Self {
        CliError::Csv { path: path.into(), source }
    }
}

impl From<sgbd::Error> for CliError {
    fn from(e: sgbd::Error) -> Self {
        match e {
            sgbd::Error::Config(msg) => CliError::Config(msg),
            sgbd::Error::Diverged { iter, .. } => CliError::Diverged { iter },
            other => CliError::Core(other),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
