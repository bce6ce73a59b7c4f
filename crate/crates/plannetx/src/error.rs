use thiserror::Error;

/// Error type shared by all modules.
///
/// The variants map onto the CLI exit-code contract: `InvalidArgument`
/// is a usage error, `Contract` a violated interface contract (schema,
/// shape, or config mismatch), `Numerical` a solver or training failure.
#[derive(Debug, Error)]
pub enum PlanError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

impl PlanError {
    pub fn invalid(msg: impl Into<String>) -> Self {
        PlanError::InvalidArgument(msg.into())
    }

    pub fn contract(msg: impl Into<String>) -> Self {
        PlanError::Contract(msg.into())
    }

    pub fn numerical(msg: impl Into<String>) -> Self {
        PlanError::Numerical(msg.into())
    }
}
