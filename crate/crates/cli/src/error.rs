use spinphoton::Error;

/// Failure classes mapped to process exit codes.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParams(_)
            | Error::InvalidInput(_)
            | Error::RegimeViolation { .. }
            | Error::Parse(_) => CliError::Config(e.to_string()),
            Error::TruncationOverflow { .. }
            | Error::Stiffness { .. }
            | Error::SingularParams(_)
            | Error::UndefinedConcurrence(_)
            | Error::NotDensity(_) => CliError::Numerical(e.to_string()),
        }
    }
}
