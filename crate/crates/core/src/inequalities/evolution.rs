//! Norm bounds for `u̇ = Au + h(t, u) + f(t)` through the scalar inequality
//! satisfied by `g(t) = ‖u(t)‖`, under
//!
//! * `Re⟨Au, u⟩ ≤ −γ(t)‖u‖²`
//! * `Re⟨h(t, u), u⟩ ≤ α(t)‖u‖^{1+p}`
//! * `‖f(t)‖ ≤ β(t)`

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::continuous::ContinuousInstance;
use super::{sample_tolerance, ConditionMargin};
use crate::error::{Error, Result};
use crate::hilbert::HilbertVector;
use crate::operator::{DenseMap, LinearMap};
use crate::rng::{point_in_ball, seeded};

type Nonlinearity = Box<dyn Fn(f64, &HilbertVector) -> HilbertVector + Send + Sync>;
type Forcing = Box<dyn Fn(f64) -> HilbertVector + Send + Sync>;

const GROWTH_TIMES: usize = 100;
const GROWTH_POINTS: usize = 20;
const FORCING_SAMPLES: usize = 1000;

pub mod names {
    pub const LINEAR_PART: &str = "Re<Au,u> <= -gamma |u|^2";
    pub const NONLINEARITY: &str = "Re<h(t,u),u> <= alpha |u|^(1+p)";
    pub const FORCING: &str = "|f(t)| <= beta";
}

pub struct EvolutionProblem {
    pub a: DenseMap,
    pub nonlinearity: Nonlinearity,
    pub forcing: Forcing,
}

impl EvolutionProblem {
    pub fn new(
        a: DenseMap,
        nonlinearity: impl Fn(f64, &HilbertVector) -> HilbertVector + Send + Sync + 'static,
        forcing: impl Fn(f64) -> HilbertVector + Send + Sync + 'static,
    ) -> Self {
        Self {
            a,
            nonlinearity: Box::new(nonlinearity),
            forcing: Box::new(forcing),
        }
    }

    pub fn rhs(&self, t: f64, u: &HilbertVector) -> HilbertVector {
        let mut out = self.a.apply(u);
        out.axpy(1.0, &(self.nonlinearity)(t, u));
        out.axpy(1.0, &(self.forcing)(t));
        out
    }

    /// `max Re⟨Au, u⟩/‖u‖²` in the grid inner product.
    pub fn numerical_abscissa(&self) -> f64 {
        let w = self.a.grid().weights();
        let n = w.len();
        let m = self.a.matrix();
        let wa = DMatrix::from_fn(n, n, |i, j| w[i] * m[(i, j)]);
        let s = (&wa + wa.transpose()) * 0.5;
        let b = DMatrix::from_fn(n, n, |i, j| s[(i, j)] / (w[i] * w[j]).sqrt());
        SymmetricEigen::new(b).eigenvalues.max()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub times: Vec<f64>,
    /// `‖u(t)‖`
    pub norms: Vec<f64>,
    /// `1/μ(t)`
    pub bounds: Vec<f64>,
    pub min_margin: f64,
    pub min_margin_at: f64,
    pub conditions: Vec<ConditionMargin>,
}

/// Integrate the evolution equation by RK4 over `[tau0, horizon]` of `inst`
/// and check `‖u(t)‖ < 1/μ(t)`. The hypotheses on `A`, `h` and `f` are
/// sampled; `h` is probed at random points in the ball that the bound
/// confines `u` to. `inst.g0` is replaced by `‖u0‖`.
pub fn evolution_norm_bound(
    problem: &EvolutionProblem,
    u0: &HilbertVector,
    inst: &ContinuousInstance,
    n_steps: usize,
    seed: u64,
) -> Result<ComparisonReport> {
    problem.a.grid().check_same(u0.grid())?;
    if n_steps == 0 {
        return Err(Error::InvalidInput("n_steps must be >= 1".into()));
    }
    let inst = ContinuousInstance {
        g0: u0.norm(),
        ..inst.clone()
    };
    let mut conditions = inst.conditions()?;

    let abscissa = problem.numerical_abscissa();
    let mut linear = ConditionMargin::new(names::LINEAR_PART);
    let mut forcing = ConditionMargin::new(names::FORCING);
    let times = inst.sample_times();
    for &t in &times {
        let g = inst.gamma.eval(t);
        linear.record(-g - abscissa, sample_tolerance(&[g, abscissa]), t);
    }
    for &t in times.iter().step_by(times.len() / FORCING_SAMPLES) {
        let (fn_, b) = ((problem.forcing)(t).norm(), inst.beta.eval(t));
        forcing.record(b - fn_, sample_tolerance(&[b, fn_]), t);
    }
    let mut nonlinear = ConditionMargin::new(names::NONLINEARITY);
    let mut rng = seeded(seed);
    let center = u0.grid().zeros();
    for &t in times.iter().step_by(times.len() / GROWTH_TIMES) {
        let radius = u0.norm().max(1.0 / inst.mu.eval(t));
        let alpha = inst.alpha.eval(t);
        for _ in 0..GROWTH_POINTS {
            let u = point_in_ball(&mut rng, &center, radius);
            let lhs = (problem.nonlinearity)(t, &u).dot(&u);
            let rhs = alpha * u.norm().powf(1.0 + inst.p);
            nonlinear.record(rhs - lhs, sample_tolerance(&[lhs, rhs]), t);
        }
    }
    conditions.extend([linear, nonlinear, forcing]);
    if let Some(c) = conditions.iter().find(|c| !c.passed) {
        return Err(Error::PreconditionFailed {
            condition: c.name.clone(),
            at: c.worst_at,
            margin: c.worst_margin,
        });
    }

    let h = (inst.horizon - inst.tau0) / n_steps as f64;
    let mut out_t = Vec::with_capacity(n_steps + 1);
    let mut norms = Vec::with_capacity(n_steps + 1);
    let mut bounds = Vec::with_capacity(n_steps + 1);
    let (mut min_margin, mut min_margin_at) = (f64::INFINITY, inst.tau0);
    let mut u = u0.clone();
    for i in 0..=n_steps {
        let t = inst.tau0 + h * i as f64;
        if i > 0 {
            let s = t - h;
            let k1 = problem.rhs(s, &u);
            let k2 = problem.rhs(s + h / 2.0, &u.add(&k1.scale(h / 2.0)));
            let k3 = problem.rhs(s + h / 2.0, &u.add(&k2.scale(h / 2.0)));
            let k4 = problem.rhs(t, &u.add(&k3.scale(h)));
            let mut incr = k1;
            incr.axpy(2.0, &k2);
            incr.axpy(2.0, &k3);
            incr.axpy(1.0, &k4);
            u.axpy(h / 6.0, &incr);
        }
        let (g, b) = (u.norm(), 1.0 / inst.mu.eval(t));
        if !(g < b) {
            return Err(Error::BoundViolated { at: t, value: g, bound: b });
        }
        if b - g < min_margin {
            min_margin = b - g;
            min_margin_at = t;
        }
        out_t.push(t);
        norms.push(g);
        bounds.push(b);
    }
    Ok(ComparisonReport {
        times: out_t,
        norms,
        bounds,
        min_margin,
        min_margin_at,
        conditions,
    })
}
