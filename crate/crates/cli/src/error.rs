use std::process::ExitCode;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Malformed input: bad JSON, bad numbers, unknown generators.
    #[error("parse error: {0}")]
    Parse(String),
    /// Well-formed input that violates a precondition.
    #[error("{0}")]
    Precondition(admnet::Error),
    /// A numerical check failed or a computation could not finish.
    #[error("{0}")]
    Numerical(admnet::Error),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

impl From<admnet::Error> for CliError {
    fn from(e: admnet::Error) -> Self {
        match e {
            admnet::Error::UnknownGenerator(_) => CliError::Parse(e.to_string()),
            e if e.is_precondition() => CliError::Precondition(e),
            e => CliError::Numerical(e),
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Parse(e.to_string())
    }
}

impl CliError {
    /// 2 parse, 3 precondition, 4 numerical.
    pub fn code(&self) -> u8 {
        match self {
            CliError::Parse(_) | CliError::Io(_) => 2,
            CliError::Precondition(_) => 3,
            CliError::Numerical(_) => 4,
        }
    }

    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(self.code())
    }
}

pub type CliResult<T> = Result<T, CliError>;
