use std::process::ExitCode;

/// Exit code for configuration problems (bad file, bad schema, bad values).
pub const EXIT_CONFIG: u8 = 1;
/// Exit code for runtime failures (numerics, IO, serialization).
pub const EXIT_RUNTIME: u8 = 2;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("numerical failure: {0}")]
    Core(#[from] persistent_core::Error),
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    /// Short machine-readable tag for structured error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Io(_) => "io",
            CliError::Json(_) => "serialization",
            CliError::Core(_) => "numerical",
        }
    }

    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Config(_) => ExitCode::from(EXIT_CONFIG),
            _ => ExitCode::from(EXIT_RUNTIME),
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
