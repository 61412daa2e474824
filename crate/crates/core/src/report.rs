//! Trajectory summaries shared by the flows and the iterations.

use serde::{Deserialize, Serialize};

use crate::hilbert::HilbertVector;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopStatus {
    StoppedByDiscrepancy,
    ExhaustedHorizon,
    StepFloor,
}

impl StopStatus {
    pub fn name(self) -> &'static str {
        match self {
            Self::StoppedByDiscrepancy => "stopped_by_discrepancy",
            Self::ExhaustedHorizon => "exhausted_horizon",
            Self::StepFloor => "step_floor",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub method: String,
    pub u_final: HilbertVector,
    /// Stopping time of a flow.
    pub t_stop: Option<f64>,
    /// Number of iterations performed; `u_final` is `u_{n_stop}`.
    pub n_stop: Option<usize>,
    /// `(t or n, ‖F(u) − f_δ‖)` at every accepted point.
    pub residual_history: Vec<(f64, f64)>,
    pub residual_at_stop: f64,
    /// `C1 δ^ζ`
    pub threshold: f64,
    /// Regularization parameter of the last step taken (`a(t_stop)` for flows).
    pub a_at_stop: f64,
    pub status: StopStatus,
    /// Accepted integrator steps or iterations.
    pub steps: usize,
    /// Rejected (halved) integrator steps.
    pub rejected_steps: usize,
    pub m1_used: Option<f64>,
    pub m1_estimated: bool,
    /// `max ‖u − u0‖` over the accepted points.
    pub max_excursion: f64,
}

impl SolveReport {
    pub fn stopped(&self) -> bool {
        self.status == StopStatus::StoppedByDiscrepancy
    }
}

/// `residual ≤ threshold`, with values within rounding of the threshold
/// counted as equal.
pub fn meets_threshold(residual: f64, threshold: f64) -> bool {
    residual <= threshold * (1.0 + 8.0 * f64::EPSILON)
}
