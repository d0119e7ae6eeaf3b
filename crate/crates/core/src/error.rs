use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix is not symmetric positive definite (pivot {pivot} = {value:e})")]
    NotSpd { pivot: usize, value: f64 },

    #[error("numerical degeneracy: {0}")]
    Degenerate(String),

    #[error("maze generation failed after {attempts} attempts (density {density})")]
    GenerationFailure { attempts: usize, density: f64 },

    #[error("goal unreachable from start")]
    Unreachable,

    #[error("contract violation: {0}")]
    ContractViolation(String),

    #[error("training diverged: {0}")]
    TrainingDivergence(String),

    #[error("unknown strategy `{0}`")]
    UnknownStrategy(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Short stable identifier, used for machine-readable error lines.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidInput(_) => "invalid-input",
            Error::Dimension(_) => "dimension",
            Error::NotSpd { .. } => "not-spd",
            Error::Degenerate(_) => "numerical-degeneracy",
            Error::GenerationFailure { .. } => "generation-failure",
            Error::Unreachable => "unreachable",
            Error::ContractViolation(_) => "contract-violation",
            Error::TrainingDivergence(_) => "training-divergence",
            Error::UnknownStrategy(_) => "unknown-strategy",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}
