use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Malformed input. `location` names the offending field.
    #[error("validation error at {location}: {message}")]
    Validation { location: String, message: String },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("singular transform: {0}")]
    Singular(String),

    #[error("step size underflow at x = {x}")]
    StepUnderflow { x: f64 },

    #[error("bracketing exhausted: {0}")]
    BracketExhausted(String),

    #[error("consistency error: {0}")]
    Consistency(String),

    #[error("resolution error: {0}")]
    Resolution(String),

    #[error("ill-conditioned: {0}")]
    Conditioning(String),

    #[error("reconstruction failed: {0}")]
    Reconstruction(String),

    #[error("index detection failed: {0}")]
    Detection(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),
}

impl Error {
    pub fn validation(location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation {
            location: location.into(),
            message: message.into(),
        }
    }

    /// True for malformed-input errors, false for numerical failures.
    pub fn is_validation(&self) -> bool {
        matches!(self, Error::Validation { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
