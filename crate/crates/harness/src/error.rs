use thiserror::Error;

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum HarnessError {
    /// Unreadable, malformed or semantically invalid configuration. The
    /// message starts with the offending field path.
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] qbayes_core::Error),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
    #[error("verification failed: {0}")]
    Verification(String),
}

impl HarnessError {
    pub fn config(field: &str, message: impl std::fmt::Display) -> Self {
        HarnessError::Config(format!("{field}: {message}"))
    }

    /// 0 success, 1 configuration problem, 2 numerical contract violation,
    /// 3 zero evidence.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Core(qbayes_core::Error::ZeroEvidence) => 3,
            HarnessError::Core(qbayes_core::Error::NumericalContract(_)) | HarnessError::Verification(_) => 2,
            HarnessError::Core(_) | HarnessError::Config(_) | HarnessError::Io { .. } => 1,
        }
    }
}
