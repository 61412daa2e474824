use thiserror::Error;

/// Errors raised by the solvers and validators in this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("shifted linear solve failed: relative residual {residual:e} above {tol:e}")]
    SolveFailed { residual: f64, tol: f64 },

    #[error("operator does not provide a derivative")]
    NoDerivative,

    #[error("operator bound {0} is required but was not declared")]
    MissingBound(&'static str),

    #[error("no convergence after {iterations} iterations: residual {residual:e}, tolerance {tol:e}")]
    NonConvergence {
        iterations: usize,
        residual: f64,
        tol: f64,
    },

    #[error("target {target:e} is not below the residual at zero {sup:e}; no root exists")]
    NoRoot { target: f64, sup: f64 },

    #[error("bracketing exceeded {steps} geometric steps")]
    BudgetExceeded { steps: usize },

    #[error("zero already satisfies the discrepancy: residual {residual:e} <= target {target:e}")]
    AlreadyCompatible { residual: f64, target: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("constraint `{condition}` violated (margin {margin:e})")]
    ConstraintViolated { condition: String, margin: f64 },

    #[error("stopping threshold {threshold:e} not reached within {n_max} iterations (last residual {residual:e})")]
    HorizonExceeded {
        n_max: usize,
        residual: f64,
        threshold: f64,
    },

    #[error("empty step-size band: lower {lower:e} exceeds upper {upper:e}")]
    InvalidStepSize { lower: f64, upper: f64 },

    #[error("precondition `{condition}` fails at {at} (margin {margin:e})")]
    PreconditionFailed {
        condition: String,
        at: f64,
        margin: f64,
    },

    #[error("bound violated at {at}: g = {value:e} exceeds 1/mu = {bound:e}")]
    BoundViolated { at: f64, value: f64, bound: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
