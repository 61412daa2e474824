use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{sample_tolerance, ConditionMargin, ScalarFn};
use crate::error::{Error, Result};
use crate::rng::seeded;

pub const CONDITION_SAMPLES: usize = 10_000;

pub mod names {
    pub const ALPHA_NONNEGATIVE: &str = "alpha >= 0";
    pub const MU_POSITIVE: &str = "mu > 0";
    pub const GROWTH: &str = "alpha/mu^p + beta <= (gamma - mu'/mu)/mu";
    pub const INITIAL: &str = "mu(tau0) g(tau0) < 1";
    pub const ALPHA_UPPER: &str = "alpha <= mu (gamma - mu'/mu)/2";
    pub const BETA_UPPER: &str = "beta <= (gamma - mu'/mu)/(2 mu)";
    pub const MU_GROWING: &str = "mu' >= 0";
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContinuousInstance {
    pub alpha: ScalarFn,
    pub beta: ScalarFn,
    pub gamma: ScalarFn,
    pub mu: ScalarFn,
    /// Derivative of `mu`; central differences are used when absent.
    #[serde(default)]
    pub mu_dot: Option<ScalarFn>,
    pub p: f64,
    pub g0: f64,
    #[serde(default)]
    pub tau0: f64,
    pub horizon: f64,
}

impl ContinuousInstance {
    pub fn mu_dot_at(&self, t: f64) -> f64 {
        match &self.mu_dot {
            Some(d) => d.eval(t),
            None => self.mu.central_difference(t),
        }
    }

    /// Right-hand side of the equality `ġ = −γg + αg^p + β`.
    pub fn rhs(&self, t: f64, g: f64) -> f64 {
        -self.gamma.eval(t) * g + self.alpha.eval(t) * g.max(0.0).powf(self.p) + self.beta.eval(t)
    }

    fn validate(&self) -> Result<()> {
        if !(self.p > 1.0 && self.p.is_finite()) {
            return Err(Error::InvalidInput(format!("p = {} must exceed 1", self.p)));
        }
        if !(self.g0 >= 0.0 && self.g0.is_finite()) {
            return Err(Error::InvalidInput(format!("g0 = {} must be >= 0", self.g0)));
        }
        if !(self.horizon > self.tau0 && self.horizon.is_finite() && self.tau0.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "horizon {} must exceed tau0 {}",
                self.horizon, self.tau0
            )));
        }
        Ok(())
    }

    /// `CONDITION_SAMPLES` uniform sample times on `[tau0, horizon]`,
    /// endpoints included.
    pub fn sample_times(&self) -> Vec<f64> {
        let n = CONDITION_SAMPLES;
        let span = self.horizon - self.tau0;
        (0..=n)
            .map(|i| if i == n { self.horizon } else { self.tau0 + span * i as f64 / n as f64 })
            .collect()
    }

    /// Sampled margins of the hypotheses behind `g(t) < 1/μ(t)`.
    pub fn conditions(&self) -> Result<Vec<ConditionMargin>> {
        self.validate()?;
        let mut alpha_ok = ConditionMargin::new(names::ALPHA_NONNEGATIVE);
        let mut mu_ok = ConditionMargin::new(names::MU_POSITIVE);
        let mut growth = ConditionMargin::new(names::GROWTH);
        for t in self.sample_times() {
            let (a, b, g, mu, md) = (
                self.alpha.eval(t),
                self.beta.eval(t),
                self.gamma.eval(t),
                self.mu.eval(t),
                self.mu_dot_at(t),
            );
            alpha_ok.record(a, 0.0, t);
            if !(mu > 0.0) {
                mu_ok.record(mu, 0.0, t);
                mu_ok.passed = false;
                continue;
            }
            mu_ok.record(mu, 0.0, t);
            let lhs = a / mu.powf(self.p) + b;
            let rhs = (g - md / mu) / mu;
            growth.record(rhs - lhs, sample_tolerance(&[lhs, g / mu, md / (mu * mu)]), t);
        }
        let mut initial = ConditionMargin::new(names::INITIAL);
        let m = 1.0 - self.mu.eval(self.tau0) * self.g0;
        initial.record(m, 0.0, self.tau0);
        initial.passed = m > 0.0;
        Ok(vec![alpha_ok, mu_ok, growth, initial])
    }
}

fn first_failure(conditions: &[ConditionMargin]) -> Option<Error> {
    conditions.iter().find(|c| !c.passed).map(|c| Error::PreconditionFailed {
        condition: c.name.clone(),
        at: c.worst_at,
        margin: c.worst_margin,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub times: Vec<f64>,
    pub g: Vec<f64>,
    /// `1/μ` at each time.
    pub bound: Vec<f64>,
    /// `min (1/μ − g)` over the trajectory.
    pub min_margin: f64,
    pub min_margin_at: f64,
    pub conditions: Vec<ConditionMargin>,
}

/// Integrate `ġ = −γg + αg^p + β` from `g0` by classical RK4 with
/// `n_steps` fixed steps and check `g(t) < 1/μ(t)` at every step.
pub fn bound_continuous(inst: &ContinuousInstance, n_steps: usize) -> Result<BoundReport> {
    if n_steps == 0 {
        return Err(Error::InvalidInput("n_steps must be >= 1".into()));
    }
    let conditions = inst.conditions()?;
    if let Some(e) = first_failure(&conditions) {
        return Err(e);
    }
    let h = (inst.horizon - inst.tau0) / n_steps as f64;
    let mut times = Vec::with_capacity(n_steps + 1);
    let mut g = Vec::with_capacity(n_steps + 1);
    let mut bound = Vec::with_capacity(n_steps + 1);
    let (mut min_margin, mut min_margin_at) = (f64::INFINITY, inst.tau0);
    let mut y = inst.g0;
    for i in 0..=n_steps {
        let t = inst.tau0 + h * i as f64;
        if i > 0 {
            let s = t - h;
            let k1 = inst.rhs(s, y);
            let k2 = inst.rhs(s + h / 2.0, y + h / 2.0 * k1);
            let k3 = inst.rhs(s + h / 2.0, y + h / 2.0 * k2);
            let k4 = inst.rhs(t, y + h * k3);
            y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        let b = 1.0 / inst.mu.eval(t);
        if !(y < b) {
            return Err(Error::BoundViolated { at: t, value: y, bound: b });
        }
        if b - y < min_margin {
            min_margin = b - y;
            min_margin_at = t;
        }
        times.push(t);
        g.push(y);
        bound.push(b);
    }
    Ok(BoundReport {
        times,
        g,
        bound,
        min_margin,
        min_margin_at,
        conditions,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitConditionReport {
    pub split_conditions: Vec<ConditionMargin>,
    pub combined_conditions: Vec<ConditionMargin>,
    pub split_holds: bool,
    pub combined_holds: bool,
    /// Sample times where the split conditions hold but the combined one fails.
    pub counterexamples: Vec<f64>,
    pub implication_holds: bool,
}

/// For `p = 2`: wherever `α ≤ μ(γ − μ̇/μ)/2` and `β ≤ (γ − μ̇/μ)/(2μ)` hold,
/// `α/μ² + β ≤ (γ − μ̇/μ)/μ` must hold too.
pub fn split_condition_check(inst: &ContinuousInstance) -> Result<SplitConditionReport> {
    if inst.p != 2.0 {
        return Err(Error::InvalidInput(format!("split-condition check needs p = 2, got {}", inst.p)));
    }
    let combined_conditions = inst.conditions()?;
    let mut alpha_ok = ConditionMargin::new(names::ALPHA_NONNEGATIVE);
    let mut alpha_up = ConditionMargin::new(names::ALPHA_UPPER);
    let mut beta_up = ConditionMargin::new(names::BETA_UPPER);
    let mut growing = ConditionMargin::new(names::MU_GROWING);
    let mut counterexamples = Vec::new();
    for t in inst.sample_times() {
        let (a, b, g, mu, md) = (
            inst.alpha.eval(t),
            inst.beta.eval(t),
            inst.gamma.eval(t),
            inst.mu.eval(t),
            inst.mu_dot_at(t),
        );
        let k = g - md / mu;
        let (ta, tb) = (
            sample_tolerance(&[a, mu * g / 2.0, md / 2.0]),
            sample_tolerance(&[b, g / mu, md / (mu * mu)]),
        );
        let (ma, mb) = (mu * k / 2.0 - a, k / (2.0 * mu) - b);
        alpha_ok.record(a, 0.0, t);
        alpha_up.record(ma, ta, t);
        beta_up.record(mb, tb, t);
        growing.record(md, sample_tolerance(&[md, mu]), t);
        let combined = k / mu - a / (mu * mu) - b;
        if a >= 0.0 && ma >= -ta && mb >= -tb && combined < -(ta / (mu * mu) + tb) {
            counterexamples.push(t);
        }
    }
    let mut initial = ConditionMargin::new(names::INITIAL);
    let m = 1.0 - inst.mu.eval(inst.tau0) * inst.g0;
    initial.record(m, 0.0, inst.tau0);
    initial.passed = m > 0.0;
    let split_conditions = vec![alpha_ok, alpha_up, beta_up, growing, initial];
    let split_holds = split_conditions.iter().all(|c| c.passed);
    let combined_holds = combined_conditions.iter().all(|c| c.passed);
    Ok(SplitConditionReport {
        implication_holds: counterexamples.is_empty() && (!split_holds || combined_holds),
        split_conditions,
        combined_conditions,
        split_holds,
        combined_holds,
        counterexamples,
    })
}

/// A feasible instance with `μ = μ0 e^{rt}`, `p ∈ {1.5, 2, 3}`, and `α`, `β`
/// splitting a random fraction of the slack `γ − μ̇/μ`. Draws are repeated
/// until the sampled conditions hold.
pub fn random_continuous_instance(seed: u64) -> ContinuousInstance {
    let mut rng = seeded(seed);
    loop {
        let p: f64 = [1.5, 2.0, 3.0][rng.random_range(0..3)];
        let mu0: f64 = rng.random_range(0.5..2.0);
        let r = rng.random_range(0.0..0.5);
        let s = rng.random_range(0.1..2.0);
        let theta = rng.random_range(0.05..0.95);
        let (u1, u2, u3) = (
            rng.random_range(0.05..0.95),
            rng.random_range(0.05..0.95),
            rng.random_range(0.0..0.95),
        );
        let extra = rng.random_range(0.0..1.0);
        let decay = rng.random_range(0.1..2.0);
        let inst = ContinuousInstance {
            alpha: ScalarFn::exp(theta * s * u1 * mu0.powf(p - 1.0), r * (p - 1.0)),
            beta: ScalarFn::exp((1.0 - theta) * s * u2 / mu0, -r),
            gamma: ScalarFn::Sum {
                terms: vec![ScalarFn::constant(r + s), ScalarFn::exp(extra, -decay)],
            },
            mu: ScalarFn::exp(mu0, r),
            mu_dot: None,
            p,
            g0: u3 / mu0,
            tau0: 0.0,
            horizon: 10.0,
        };
        if inst.conditions().is_ok_and(|c| c.iter().all(|c| c.passed)) {
            return inst;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn split_example() -> ContinuousInstance {
        ContinuousInstance {
            alpha: ScalarFn::exp(0.25, 0.5),
            beta: ScalarFn::exp(0.25, -0.5),
            gamma: ScalarFn::constant(1.0),
            mu: ScalarFn::exp(1.0, 0.5),
            mu_dot: None,
            p: 2.0,
            g0: 0.5,
            tau0: 0.0,
            horizon: 10.0,
        }
    }

    #[test]
    fn linear_decay() {
        let inst = ContinuousInstance {
            alpha: ScalarFn::constant(0.0),
            beta: ScalarFn::constant(0.0),
            gamma: ScalarFn::constant(1.0),
            mu: ScalarFn::constant(1.0),
            mu_dot: None,
            p: 2.0,
            g0: 0.5,
            tau0: 0.0,
            horizon: 5.0,
        };
        let r = bound_continuous(&inst, 5000).unwrap();
        for (t, g) in r.times.iter().zip(&r.g) {
            assert!((g - 0.5 * (-t).exp()).abs() <= 1e-12);
        }
        assert!((r.min_margin - 0.5).abs() < 1e-15);
    }

    #[test]
    fn split_example_matches_closed_form() {
        // With w = g e^{t/2}: ẇ = (w − 1)²/4, so g = (1 − 1/(2 + t/4)) e^{−t/2}.
        let inst = split_example();
        let r = bound_continuous(&inst, 100_000).unwrap();
        for (t, g) in r.times.iter().zip(&r.g).step_by(997) {
            let exact = (1.0 - 1.0 / (2.0 + t / 4.0)) * (-t / 2.0).exp();
            assert!((g - exact).abs() <= 1e-10, "t = {t}");
            assert!(*g < (-t / 2.0).exp());
        }
        let c = split_condition_check(&inst).unwrap();
        assert!(c.split_holds && c.combined_holds && c.implication_holds);
    }

    #[test]
    fn analytic_derivative_agrees() {
        let mut inst = split_example();
        let fd = inst.conditions().unwrap();
        inst.mu_dot = Some(ScalarFn::exp(0.5, 0.5));
        let exact = inst.conditions().unwrap();
        for (a, b) in fd.iter().zip(&exact) {
            assert_eq!(a.passed, b.passed);
        }
    }

    #[test]
    fn initial_condition_is_strict() {
        let mut inst = split_example();
        inst.g0 = 1.0;
        assert!(matches!(
            bound_continuous(&inst, 100),
            Err(Error::PreconditionFailed { ref condition, .. }) if condition == names::INITIAL
        ));
    }

    #[test]
    fn growth_violation_located() {
        let mut inst = split_example();
        inst.beta = ScalarFn::exp(0.3, -0.5);
        match bound_continuous(&inst, 100) {
            Err(Error::PreconditionFailed { condition, margin, .. }) => {
                assert_eq!(condition, names::GROWTH);
                assert!(margin < 0.0);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn random_instances_are_feasible_and_bounded() {
        for seed in 0..20 {
            let inst = random_continuous_instance(seed);
            let r = bound_continuous(&inst, 2000).unwrap();
            assert!(r.min_margin > 0.0);
        }
    }

    #[test]
    fn split_check_rejects_other_p() {
        let mut inst = split_example();
        inst.p = 3.0;
        assert!(split_condition_check(&inst).is_err());
    }

    #[test]
    fn instance_json_round_trip() {
        let inst = random_continuous_instance(7);
        let s = serde_json::to_string(&inst).unwrap();
        let back: ContinuousInstance = serde_json::from_str(&s).unwrap();
        assert_eq!(inst, back);
    }
}
