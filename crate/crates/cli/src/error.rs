use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad spec, flag or input; exit status 2.
    #[error("{0}")]
    Usage(String),
    /// A run, plot or verification failed; exit status 1.
    #[error("{0}")]
    Failed(String),
    #[error(transparent)]
    Core(#[from] zoslice::Error),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }

    pub fn io(context: impl Into<String>) -> impl FnOnce(std::io::Error) -> CliError {
        let context = context.into();
        move |source| CliError::Io { context, source }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
