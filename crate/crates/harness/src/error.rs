use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{0}")]
    Config(String),

    #[error("malformed document: {0}")]
    Parse(String),

    #[error(transparent)]
    Core(#[from] explorer_core::Error),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl HarnessError {
    pub(crate) fn parse(err: serde_json::Error) -> Self {
        HarnessError::Parse(err.to_string())
    }

    /// Stable identifier for the machine-readable error line.
    pub fn kind(&self) -> &'static str {
        match self {
            HarnessError::Config(_) => "config",
            HarnessError::Parse(_) => "malformed-document",
            HarnessError::Core(e) => e.kind(),
            HarnessError::Io(_) => "io",
            HarnessError::Csv(_) => "csv",
        }
    }
}

impl From<serde_json::Error> for HarnessError {
    fn from(err: serde_json::Error) -> Self {
        HarnessError::parse(err)
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;
