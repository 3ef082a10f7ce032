use thiserror::Error;

/// Errors raised by the laboratory. Each variant maps onto a process exit code
/// used by the command-line front end.
#[derive(Debug, Error)]
pub enum LabError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("constraint violated: {0}")]
    Constraint(String),
    #[error("no convergence: {0}")]
    NonConvergence(String),
    #[error("quadrature error estimate {estimate:.3e} exceeds target {target:.3e}")]
    Quadrature { estimate: f64, target: f64 },
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed input: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, LabError>;

impl LabError {
    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::InvalidInput(_) | LabError::Constraint(_) => 2,
            LabError::NonConvergence(_) | LabError::Quadrature { .. } => 3,
            LabError::Io(_) | LabError::Format(_) => 4,
        }
    }
}

impl From<csv::Error> for LabError {
    fn from(e: csv::Error) -> Self {
        LabError::Format(e.to_string())
    }
}

impl From<serde_json::Error> for LabError {
    fn from(e: serde_json::Error) -> Self {
        LabError::Format(e.to_string())
    }
}

/// Shorthand for an `InvalidInput` error when `cond` fails.
pub(crate) fn require(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(LabError::InvalidInput(msg()))
    }
}
