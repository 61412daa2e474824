//! Continuous regularized flows with a discrepancy stopping time:
//!
//! * Newton type: `u̇ = −(F′(u) + a(t)I)⁻¹ G`
//! * gradient type: `u̇ = −(F′(u) + a(t)I)* G`
//! * simple: `u̇ = −G`
//!
//! with `G = F(u) + a(t)u − f_δ`, integrated by adaptive explicit Euler and
//! stopped at the first `t` with `‖F(u(t)) − f_δ‖ ≤ C1 δ^ζ`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::HilbertVector;
use crate::linalg::solve_shifted;
use crate::operator::NonlinearOperator;
use crate::regularized::{solve_regularized, RegularizedSolution};
use crate::report::{meets_threshold, SolveReport, StopStatus};
use crate::schedules::{ContinuousKind, ContinuousSchedule};

const LINEAR_TOL: f64 = 1e-12;
pub const DEFAULT_T_MAX: f64 = 1e6;
const DOUBLE_AFTER: usize = 5;
const STOP_REFINE_REL: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlowMethod {
    Newton,
    Gradient,
    Simple,
}

impl FlowMethod {
    pub fn kind(self) -> ContinuousKind {
        match self {
            Self::Newton => ContinuousKind::NewtonFlow,
            Self::Gradient => ContinuousKind::GradientFlow,
            Self::Simple => ContinuousKind::SimpleFlow,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Newton => "flow_newton",
            Self::Gradient => "flow_gradient",
            Self::Simple => "flow_simple",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowConfig {
    pub c1: f64,
    pub zeta: f64,
    pub schedule: ContinuousSchedule,
    pub step_init: f64,
    pub step_min: f64,
    /// Upper cap on the step; `1` keeps Newton-type Euler steps damped.
    pub step_max: f64,
    /// Final time; derived from `y_norm` when absent.
    pub t_max: Option<f64>,
    pub max_steps: usize,
    /// Known `‖y‖`, used for the default final time.
    pub y_norm: Option<f64>,
}

impl FlowConfig {
    pub fn new(c1: f64, zeta: f64, schedule: ContinuousSchedule) -> Self {
        Self {
            c1,
            zeta,
            schedule,
            step_init: 0.5,
            step_min: 1e-12,
            step_max: 1.0,
            t_max: None,
            max_steps: 5_000_000,
            y_norm: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if !(self.c1 > 1.0 && self.c1.is_finite()) {
            return bad(format!("C1 = {} must exceed 1", self.c1));
        }
        if !(self.zeta > 0.0 && self.zeta <= 1.0) {
            return bad(format!("zeta = {} must lie in (0, 1]", self.zeta));
        }
        if !(self.step_min > 0.0
            && self.step_min <= self.step_init
            && self.step_init <= self.step_max
            && self.step_max.is_finite())
        {
            return bad(format!(
                "need 0 < step_min <= step_init <= step_max, got {}, {}, {}",
                self.step_min, self.step_init, self.step_max
            ));
        }
        if let Some(t) = self.t_max {
            if !(t > 0.0) {
                return bad(format!("t_max = {t} must be > 0"));
            }
        }
        Ok(())
    }

    pub fn threshold(&self, delta: f64) -> f64 {
        self.c1 * delta.powf(self.zeta)
    }

    /// `t0` with `δ/a(t0) = ‖y‖/(C − 1)`, `C = (C1 + 1)/2`, when `‖y‖` is known.
    pub fn horizon(&self, delta: f64) -> f64 {
        if let Some(t) = self.t_max {
            return t;
        }
        match self.y_norm {
            Some(y) if y > 0.0 => {
                let c = 0.5 * (self.c1 + 1.0);
                let t0 = self.schedule.time_of(delta * (c - 1.0) / y);
                if t0 > 0.0 {
                    t0
                } else {
                    DEFAULT_T_MAX
                }
            }
            _ => DEFAULT_T_MAX,
        }
    }
}

/// Right-hand side of the flow at `(a, u)`.
pub fn flow_rhs<F: NonlinearOperator + ?Sized>(
    method: FlowMethod,
    op: &F,
    f_delta: &HilbertVector,
    a: f64,
    u: &HilbertVector,
) -> Result<HilbertVector> {
    let mut g = op.apply(u);
    g.axpy(a, u);
    g.axpy(-1.0, f_delta);
    rhs_from_defect(method, op, a, u, &g)
}

fn rhs_from_defect<F: NonlinearOperator + ?Sized>(
    method: FlowMethod,
    op: &F,
    a: f64,
    u: &HilbertVector,
    g: &HilbertVector,
) -> Result<HilbertVector> {
    match method {
        FlowMethod::Newton => {
            let jac = op.derivative(u).ok_or(Error::NoDerivative)?;
            Ok(-&solve_shifted(jac.as_ref(), a, g, LINEAR_TOL)?)
        }
        FlowMethod::Gradient => {
            let jac = op.derivative(u).ok_or(Error::NoDerivative)?;
            let mut d = jac.adjoint_apply(g);
            d.axpy(a, g);
            Ok(-&d)
        }
        FlowMethod::Simple => Ok(-g),
    }
}

/// One explicit Euler step of length `h`.
pub fn euler_step<F: NonlinearOperator + ?Sized>(
    method: FlowMethod,
    op: &F,
    f_delta: &HilbertVector,
    a: f64,
    u: &HilbertVector,
    h: f64,
) -> Result<HilbertVector> {
    let mut next = u.clone();
    next.axpy(h, &flow_rhs(method, op, f_delta, a, u)?);
    Ok(next)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InitialPoint {
    pub u0: HilbertVector,
    /// `h(0) = ‖F(u0) + a0 u0 − f_δ‖`
    pub defect: f64,
    /// Certified lower bound on `¼ a0 ‖V_δ(0)‖`.
    pub bound: f64,
    pub solution: RegularizedSolution,
}

/// An approximate solution `u0` of `F(u) + a0 u = f_δ` with
/// `h(0) ≤ ¼ a0 ‖V_δ(0)‖`.
///
/// Since `‖V_δ(0)‖ ≥ ‖u0‖ − h(0)/a0`, the inequality is certified once
/// `5 h(0) ≤ a0 ‖u0‖`.
pub fn init_u0<F: NonlinearOperator + ?Sized>(
    op: &F,
    f_delta: &HilbertVector,
    a0: f64,
) -> Result<InitialPoint> {
    let mut tol = 1e-2 * a0 * f_delta.norm();
    let mut warm: Option<HilbertVector> = None;
    for _ in 0..12 {
        let sol = solve_regularized(op, f_delta, a0, Some(tol.max(1e-300)), warm.as_ref())?;
        let defect = sol.residual;
        let bound = 0.25 * (a0 * sol.v.norm() - defect);
        if defect <= bound {
            return Ok(InitialPoint {
                u0: sol.v.clone(),
                defect,
                bound,
                solution: sol,
            });
        }
        warm = Some(sol.v);
        tol *= 0.1;
    }
    Err(Error::NonConvergence {
        iterations: 12,
        residual: tol,
        tol: 0.0,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZeroStartCertificate {
    /// `‖0 − V_δ(0)‖`
    pub g0: f64,
    /// `‖F(0) − f_δ‖/a0`
    pub bound: f64,
    pub holds: bool,
}

/// Check `‖V_δ(0)‖ ≤ ‖F(0) − f_δ‖/a0`, which makes `u0 = 0` admissible.
pub fn zero_start_certificate<F: NonlinearOperator + ?Sized>(
    op: &F,
    f_delta: &HilbertVector,
    a0: f64,
) -> Result<ZeroStartCertificate> {
    let r0 = op.apply(&op.grid().zeros()).sub(f_delta).norm();
    let sol = solve_regularized(op, f_delta, a0, Some(1e-12 * a0 * f_delta.norm().max(1e-300)), None)?;
    let g0 = sol.v.norm();
    let bound = r0 / a0;
    Ok(ZeroStartCertificate {
        g0,
        bound,
        holds: g0 <= bound * (1.0 + 1e-10),
    })
}

fn integrate<F: NonlinearOperator + ?Sized>(
    method: FlowMethod,
    op: &F,
    f_delta: &HilbertVector,
    delta: f64,
    cfg: &FlowConfig,
    u0: &HilbertVector,
) -> Result<SolveReport> {
    cfg.validate()?;
    if cfg.schedule.kind != method.kind() {
        return Err(Error::InvalidConfig(format!(
            "schedule kind {} used with {}",
            cfg.schedule.kind.name(),
            method.name()
        )));
    }
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::InvalidInput(format!("delta = {delta} must be > 0")));
    }
    op.grid().check_same(f_delta.grid())?;
    op.grid().check_same(u0.grid())?;
    let threshold = cfg.threshold(delta);
    if threshold <= delta {
        return Err(Error::InvalidConfig(format!(
            "C1 delta^zeta = {threshold} must exceed delta = {delta}"
        )));
    }
    let t_max = cfg.horizon(delta);
    let s = &cfg.schedule;

    let mut t = 0.0;
    let mut u = u0.clone();
    let mut fu = op.apply(&u);
    let mut residual = fu.sub(f_delta).norm();
    let mut history = vec![(0.0, residual)];
    let mut excursion = 0.0f64;
    let finish = |u: HilbertVector,
                  t: f64,
                  residual: f64,
                  history: Vec<(f64, f64)>,
                  status,
                  steps,
                  rejected,
                  excursion: f64| {
        SolveReport {
            method: method.name().to_string(),
            u_final: u,
            t_stop: Some(t),
            n_stop: None,
            residual_history: history,
            residual_at_stop: residual,
            threshold,
            a_at_stop: s.a(t),
            status,
            steps,
            rejected_steps: rejected,
            m1_used: None,
            m1_estimated: false,
            max_excursion: excursion,
        }
    };
    if meets_threshold(residual, threshold) {
        return Ok(finish(u, 0.0, residual, history, StopStatus::StoppedByDiscrepancy, 0, 0, excursion));
    }

    let mut h = cfg.step_init;
    let (mut steps, mut rejected, mut streak) = (0usize, 0usize, 0usize);
    while steps < cfg.max_steps {
        if t >= t_max {
            return Ok(finish(u, t, residual, history, StopStatus::ExhaustedHorizon, steps, rejected, excursion));
        }
        let a = s.a(t);
        let mut g = fu.clone();
        g.axpy(a, &u);
        g.axpy(-1.0, f_delta);
        let g_norm = g.norm();
        let dir = rhs_from_defect(method, op, a, &u, &g)?;
        let floor = 16.0 * f64::EPSILON * (fu.norm() + a * u.norm() + f_delta.norm());
        let accepted = loop {
            let mut trial = u.clone();
            trial.axpy(h, &dir);
            let f_trial = op.apply(&trial);
            let mut g_trial = f_trial.clone();
            g_trial.axpy(a, &trial);
            g_trial.axpy(-1.0, f_delta);
            if g_trial.norm() <= g_norm * (1.0 + 1e-12) + floor {
                break Some((trial, f_trial));
            }
            rejected += 1;
            streak = 0;
            h *= 0.5;
            if h < cfg.step_min {
                break None;
            }
        };
        let Some((trial, f_trial)) = accepted else {
            return Ok(finish(u, t, residual, history, StopStatus::StepFloor, steps, rejected, excursion));
        };
        steps += 1;
        let r_trial = f_trial.sub(f_delta).norm();
        if meets_threshold(r_trial, threshold) {
            // Locate the first crossing inside the step.
            let (mut lo, mut hi) = (0.0, h);
            let (mut u_hi, mut r_hi) = (trial, r_trial);
            while hi - lo > STOP_REFINE_REL * (t + hi) {
                let mid = 0.5 * (lo + hi);
                let mut um = u.clone();
                um.axpy(mid, &dir);
                let rm = op.apply(&um).sub(f_delta).norm();
                if meets_threshold(rm, threshold) {
                    hi = mid;
                    u_hi = um;
                    r_hi = rm;
                } else {
                    lo = mid;
                }
            }
            t += hi;
            history.push((t, r_hi));
            excursion = excursion.max(u_hi.distance(u0));
            return Ok(finish(u_hi, t, r_hi, history, StopStatus::StoppedByDiscrepancy, steps, rejected, excursion));
        }
        t += h;
        excursion = excursion.max(trial.distance(u0));
        u = trial;
        fu = f_trial;
        residual = r_trial;
        history.push((t, residual));
        streak += 1;
        if streak >= DOUBLE_AFTER {
            h = (2.0 * h).min(cfg.step_max);
            streak = 0;
        }
        h = h.min((t_max - t).max(cfg.step_min));
    }
    Ok(finish(u, t, residual, history, StopStatus::ExhaustedHorizon, steps, rejected, excursion))
}

pub fn flow_newton<F: NonlinearOperator + ?Sized>(
    op: &F,
    f_delta: &HilbertVector,
    delta: f64,
    cfg: &FlowConfig,
    u0: &HilbertVector,
) -> Result<SolveReport> {
    integrate(FlowMethod::Newton, op, f_delta, delta, cfg, u0)
}

pub fn flow_gradient<F: NonlinearOperator + ?Sized>(
    op: &F,
    f_delta: &HilbertVector,
    delta: f64,
    cfg: &FlowConfig,
    u0: &HilbertVector,
) -> Result<SolveReport> {
    integrate(FlowMethod::Gradient, op, f_delta, delta, cfg, u0)
}

pub fn flow_simple<F: NonlinearOperator + ?Sized>(
    op: &F,
    f_delta: &HilbertVector,
    delta: f64,
    cfg: &FlowConfig,
    u0: &HilbertVector,
) -> Result<SolveReport> {
    integrate(FlowMethod::Simple, op, f_delta, delta, cfg, u0)
}

pub fn run_flow<F: NonlinearOperator + ?Sized>(
    method: FlowMethod,
    op: &F,
    f_delta: &HilbertVector,
    delta: f64,
    cfg: &FlowConfig,
    u0: &HilbertVector,
) -> Result<SolveReport> {
    integrate(method, op, f_delta, delta, cfg, u0)
}
