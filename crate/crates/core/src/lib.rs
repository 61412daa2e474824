//! Stable solvers for monotone operator equations `F(u) = f` from noisy data.
//!
//! The crate provides the discrepancy principle for choosing the
//! regularization parameter, continuous-time flows and discrete iterations
//! with a-posteriori stopping, validators for regularization schedules,
//! checkers for nonlinear differential inequalities, and a Hammerstein
//! integral-equation benchmark.

pub mod bench;
pub mod discrepancy;
pub mod error;
pub mod flows;
pub mod hilbert;
pub mod inequalities;
pub mod iterations;
pub mod linalg;
pub mod operator;
pub mod regularized;
pub mod report;
pub mod rng;
pub mod schedules;
pub mod verify;

pub use error::{Error, Result};
pub use hilbert::{weighted_inner_product, Grid, HilbertVector};
pub use operator::{AffineOperator, DenseMap, FnOperator, LinearMap, NonlinearOperator, OperatorBounds};
