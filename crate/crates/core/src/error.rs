use thiserror::Error;

/// Errors raised by the geometry, cut and LP routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum HeisError {
    /// A documented precondition on the inputs does not hold.
    #[error("precondition violated: {0}")]
    Precondition(String),
    /// A point or target fell outside the configured search window.
    #[error("outside window: {0}")]
    WindowExceeded(String),
    /// The wedge evaluator only handles horizontal and vertical pairs.
    #[error("unsupported pair: {0}")]
    UnsupportedPair(String),
    /// A solver or root-finder failed to converge.
    #[error("numeric failure: {0}")]
    Numeric(String),
}

impl HeisError {
    pub fn precondition(msg: impl Into<String>) -> Self {
        HeisError::Precondition(msg.into())
    }

    pub fn numeric(msg: impl Into<String>) -> Self {
        HeisError::Numeric(msg.into())
    }

    /// Numeric failures are distinguished from bad input by callers such as the CLI.
    pub fn is_numeric(&self) -> bool {
        matches!(self, HeisError::Numeric(_))
    }
}

pub type Result<T> = std::result::Result<T, HeisError>;
