use std::io;
use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] coro_core::Error),
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("invalid JSON in {path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("server: {0}")]
    Server(String),
}

pub type Result<T> = std::result::Result<T, CliError>;

pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

impl CliError {
    /// 2 for input the caller can fix, 3 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(coro_core::Error::Io(e)) if e.kind() == io::ErrorKind::NotFound => EXIT_VALIDATION,
            CliError::Core(e) if e.is_validation() => EXIT_VALIDATION,
            CliError::Usage(_) | CliError::Json { .. } => EXIT_VALIDATION,
            CliError::Io { source, .. } if source.kind() == io::ErrorKind::NotFound => EXIT_VALIDATION,
            _ => EXIT_RUNTIME,
        }
    }
}

pub fn io_err(path: impl Into<PathBuf>) -> impl FnOnce(io::Error) -> CliError {
    let path = path.into();
    move |source| CliError::Io { path, source }
}
