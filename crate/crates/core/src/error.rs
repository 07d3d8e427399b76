use thiserror::Error;

/// Errors raised by the network solvers.
///
/// Variants fall into three groups that the command-line driver maps onto
/// distinct exit codes: invalid input (preconditions), numerical
/// consistency failures, and resource/iteration limits.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid edge parameters: {0}")]
    InvalidParams(String),

    #[error("frequency {re}{im:+}i is not in the open right half-plane")]
    InvalidFrequency { re: f64, im: f64 },

    #[error("invalid network: {0}")]
    InvalidNetwork(String),

    #[error("invalid boundary specification: {0}")]
    InvalidBoundary(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("singular system while {0}")]
    Singular(String),

    #[error("consistency check `{check}` failed: residual {residual:e} exceeds {tolerance:e}")]
    Consistency {
        check: String,
        residual: f64,
        tolerance: f64,
    },

    #[error("{0} did not converge")]
    NotConverged(String),

    #[error("size cap exceeded: {0}")]
    CapExceeded(String),

    #[error("parameter outside the certified range: {0}")]
    Range(String),

    #[error("truncation depth {have} is insufficient, need at least {need}")]
    DepthInsufficient { have: usize, need: usize },

    #[error("unknown generator `{0}`")]
    UnknownGenerator(String),
}

impl Error {
    pub(crate) fn consistency(check: impl Into<String>, residual: f64, tolerance: f64) -> Self {
        Error::Consistency {
            check: check.into(),
            residual,
            tolerance,
        }
    }

    /// True for errors caused by invalid user input rather than numerics.
    pub fn is_precondition(&self) -> bool {
        matches!(
            self,
            Error::InvalidParams(_)
                | Error::InvalidFrequency { .. }
                | Error::InvalidNetwork(_)
                | Error::InvalidBoundary(_)
                | Error::InvalidArgument(_)
                | Error::Range(_)
                | Error::DepthInsufficient { .. }
                | Error::UnknownGenerator(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
