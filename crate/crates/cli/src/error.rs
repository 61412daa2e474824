use thiserror::Error;

use dsm_core::Error as CoreError;

/// Process exit codes.
pub mod exit {
    pub const OK: u8 = 0;
    /// A schedule or inequality check ran and did not pass.
    pub const CHECK_FAILED: u8 = 1;
    pub const NON_CONVERGENCE: u8 = 2;
    pub const CONFIG: u8 = 3;
    pub const IO: u8 = 4;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("solver did not converge: {0}")]
    Solver(CoreError),

    #[error("{0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Config(_) => exit::CONFIG,
            Self::Solver(_) => exit::NON_CONVERGENCE,
            Self::Io(_) => exit::IO,
        }
    }
}

/// Whether a library error reflects bad input rather than a failed solve.
pub fn is_config_error(e: &CoreError) -> bool {
    matches!(
        e,
        CoreError::InvalidConfig(_)
            | CoreError::InvalidInput(_)
            | CoreError::ConstraintViolated { .. }
            | CoreError::GridMismatch(_)
            | CoreError::MissingBound(_)
            | CoreError::NoDerivative
            | CoreError::InvalidStepSize { .. }
    )
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        if is_config_error(&e) {
            Self::Config(e.to_string())
        } else {
            Self::Solver(e)
        }
    }
}
