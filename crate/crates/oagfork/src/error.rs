use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OagError {
    /// The input is malformed or violates a documented precondition.
    #[error("configuration error: {0}")]
    Config(String),
    /// Sign determination did not converge within the refinement budget.
    #[error("precision exhausted: {0}")]
    Precision(String),
    /// An internal consistency check failed.
    #[error("internal error: {0}")]
    Internal(String),
}

impl OagError {
    pub fn config(msg: impl Into<String>) -> Self {
        OagError::Config(msg.into())
    }

    pub fn internal(msg: impl Into<String>) -> Self {
        OagError::Internal(msg.into())
    }

    pub fn is_config(&self) -> bool {
        matches!(self, OagError::Config(_))
    }
}

pub type Result<T> = std::result::Result<T, OagError>;
