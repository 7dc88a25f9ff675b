use thiserror::Error;

/// Errors raised by the sampling, coupling and analysis routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum HmcError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A gradient or energy became non-finite. `position`/`momentum` hold the
    /// offending phase-space point.
    #[error("numerical domain error: {message} at position {position:?}")]
    NumericalDomain {
        message: String,
        position: Vec<f64>,
        momentum: Vec<f64>,
    },

    #[error("unsupported flow mode: {0}")]
    UnsupportedMode(String),

    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, HmcError>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(HmcError::InvalidParameter(msg.into()))
}
