use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }
}

impl From<trendband::Error> for CliError {
    fn from(e: trendband::Error) -> Self {
        use trendband::Error as E;
        match e {
            E::InvalidConfig(_) => CliError::Usage(e.to_string()),
            E::InvalidInput(_) => CliError::Data(e.to_string()),
            E::InsufficientData { .. }
            | E::DegenerateFit(_)
            | E::NoSelection
            | E::NoBand
            | E::NoValidPoint
            | E::FitError(_)
            | E::UndefinedCriteria
            | E::Internal(_) => CliError::Numeric(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
