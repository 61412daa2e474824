//! Bounds for solutions of `ġ ≤ −γ(t) g + α(t) g^p + β(t)` and of its
//! explicit discrete analogue, checked on the extremal equality trajectory.

pub mod continuous;
pub mod discrete;
pub mod evolution;

pub use continuous::{
    bound_continuous, split_condition_check, random_continuous_instance, BoundReport,
    ContinuousInstance, SplitConditionReport,
};
pub use discrete::{bound_discrete, random_discrete_instance, DiscreteInstance, DiscreteReport};
pub use evolution::{evolution_norm_bound, ComparisonReport, EvolutionProblem};

use serde::{Deserialize, Serialize};

/// Closed-form scalar functions of time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ScalarFn {
    Constant { value: f64 },
    /// `scale · e^{rate t}`
    Exp { scale: f64, rate: f64 },
    /// `scale · (shift + t)^exponent`
    Power { scale: f64, shift: f64, exponent: f64 },
    Sum { terms: Vec<ScalarFn> },
}

impl ScalarFn {
    pub fn constant(value: f64) -> Self {
        Self::Constant { value }
    }

    pub fn exp(scale: f64, rate: f64) -> Self {
        Self::Exp { scale, rate }
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Self::Constant { value } => *value,
            Self::Exp { scale, rate } => scale * (rate * t).exp(),
            Self::Power { scale, shift, exponent } => scale * (shift + t).powf(*exponent),
            Self::Sum { terms } => terms.iter().map(|f| f.eval(t)).sum(),
        }
    }

    /// Central difference with step `1e-6`.
    pub fn central_difference(&self, t: f64) -> f64 {
        const H: f64 = 1e-6;
        (self.eval(t + H) - self.eval(t - H)) / (2.0 * H)
    }
}

/// Worst sampled margin of one condition; negative means violated.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionMargin {
    pub name: String,
    pub worst_margin: f64,
    pub worst_at: f64,
    pub passed: bool,
}

impl ConditionMargin {
    fn new(name: &str) -> Self {
        Self {
            name: name.to_string(),
            worst_margin: f64::INFINITY,
            worst_at: f64::NAN,
            passed: true,
        }
    }

    /// Record `rhs − lhs` at `at`; fails when below `−tol`.
    fn record(&mut self, margin: f64, tol: f64, at: f64) {
        if margin < self.worst_margin || margin.is_nan() {
            self.worst_margin = margin;
            self.worst_at = at;
        }
        if !(margin >= -tol) {
            self.passed = false;
        }
    }
}

/// Slack allowed in a sampled inequality, relative to the size of its terms.
pub(crate) fn sample_tolerance(terms: &[f64]) -> f64 {
    1e-9 * terms.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}
