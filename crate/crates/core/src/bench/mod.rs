//! The Hammerstein integral-equation benchmark, its noise model, synthetic
//! test problems and a noise-level sweep of the Newton-type iteration.

pub mod hammerstein;
pub mod noise;
pub mod synthetic;
pub mod sweep;

use serde::{Deserialize, Serialize};

use crate::hilbert::HilbertVector;

pub use hammerstein::{hammerstein_apply, hammerstein_derivative, HammersteinProblem};
pub use noise::{gen_noise, NoiseDraw, NoiseSpec};
pub use synthetic::{RankOneProblem, SyntheticMonotone};
pub use sweep::{run_sweep, SweepConfig, SweepRow};

/// Inner product used for norms of grid functions.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormConvention {
    /// Trapezoid-weighted, approximating the norm of `L²(0,1)`.
    #[default]
    WeightedL2,
    /// Plain sum of squares of nodal values.
    Euclidean,
}

/// Operator, exact and noisy data, and the noise level.
#[derive(Clone, Debug)]
pub struct NoisyProblem<F> {
    pub op: F,
    pub f_exact: HilbertVector,
    pub f_delta: HilbertVector,
    pub delta: f64,
    pub exact_solution: Option<HilbertVector>,
}

impl<F> NoisyProblem<F> {
    /// `‖u − y‖/‖y‖` when the exact solution is known.
    pub fn relative_error(&self, u: &HilbertVector) -> Option<f64> {
        self.exact_solution
            .as_ref()
            .map(|y| u.distance(y) / y.norm())
    }
}
