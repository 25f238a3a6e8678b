use sepness_core::Error;

/// Stable process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitCode {
    Success = 0,
    Input = 1,
    Capacity = 2,
    Verification = 3,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Engine(#[from] Error),
    #[error("{0}")]
    Input(String),
    #[error("io error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed JSON in {path}: {source}")]
    Json { path: String, source: serde_json::Error },
    #[error("verification failed: {}", .0.join(", "))]
    Verification(Vec<String>),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Engine(Error::Capacity(_) | Error::Numerical { .. } | Error::EventCap { .. }) => ExitCode::Capacity,
            CliError::Engine(_) | CliError::Input(_) | CliError::Io { .. } | CliError::Json { .. } => ExitCode::Input,
            CliError::Verification(_) => ExitCode::Verification,
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;

macro_rules! bail_input {
    ($($t:tt)*) => { return Err($crate::error::CliError::Input(format!($($t)*))) };
}
pub(crate) use bail_input;
