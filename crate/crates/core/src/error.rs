//! Crate-wide error type and exit-code mapping for the CLI.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("eigensolver did not converge")]
    EigensolverFailure,

    #[error("parity check failed: {0}")]
    ParityCheck(String),

    #[error("orbitals not orthonormal: gram defect {0:.3e}")]
    NonOrthonormal(f64),

    #[error("step defect {defect:.3e} exceeds limit {limit:.3e} at t = {t}")]
    StepFailure { t: f64, defect: f64, limit: f64 },

    #[error("one-body density not invertible after regularization: {0}")]
    SingularDensity(String),

    #[error("mode 3/4 occupation {0:.3e} above two-mode threshold")]
    ModeLeakage(f64),

    #[error("likelihood family is flat: the measurement carries no information")]
    NoInformation,

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// CLI exit code: 2 config, 3 numerical, 4 no-information.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::InvalidInput(_) => 2,
            Error::NoInformation => 4,
            _ => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
