use thiserror::Error;

/// Errors produced by the estimation, bootstrap and simulation routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("insufficient data around tau = {tau}")]
    InsufficientData { tau: f64 },

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("no bandwidth candidate produced a finite criterion")]
    NoSelection,

    #[error("no valid grid point available to build a band")]
    NoBand,

    #[error("insufficient data at every grid point")]
    NoValidPoint,

    #[error("least squares fit failed: {0}")]
    FitError(String),

    #[error("information criteria undefined for a zero residual variance")]
    UndefinedCriteria,

    #[error("internal numerical error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidInput(msg.into()))
}
