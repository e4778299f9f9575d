use thiserror::Error;

/// Configuration problems, reported before any computation starts.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    ParseError { line: usize, message: String },

    #[error("missing required key `{0}`")]
    MissingKey(String),

    #[error("invalid value for `{field}`{}: {reason}", line.map(|l| format!(" (line {l})")).unwrap_or_default())]
    InvalidValue {
        field: String,
        line: Option<usize>,
        reason: String,
    },
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("I/O error: {0}")]
    Io(String),

    #[error("configuration error: {0}")]
    Config(#[from] ConfigError),

    #[error("domain error: {0}")]
    Domain(qsl_core::Error),

    #[error("verification failed: {0}")]
    Verification(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => 1,
            CliError::Config(_) => 2,
            CliError::Domain(_) => 3,
            CliError::Verification(_) => 4,
        }
    }
}

impl From<qsl_core::Error> for CliError {
    fn from(e: qsl_core::Error) -> Self {
        match e {
            qsl_core::Error::Io(msg) => CliError::Io(msg),
            other => CliError::Domain(other),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
