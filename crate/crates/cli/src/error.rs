use thiserror::Error;

/// Failure of a subcommand, carrying the process exit code it maps to.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, bad config or unreadable inputs (exit 2).
    #[error("{0}")]
    Usage(String),
    /// A verification check did not meet its tolerance (exit 1).
    #[error("check failed: {0}")]
    Check(String),
    #[error(transparent)]
    Core(#[from] samp_core::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use samp_core::Error as E;
        match self {
            CliError::Usage(_) => 2,
            CliError::Check(_) => 1,
            CliError::Core(e) => match e {
                E::Input(_) | E::ShapeMismatch { .. } | E::Io { .. } | E::Format { .. } | E::TooLarge { .. } => 2,
                _ => 1,
            },
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
