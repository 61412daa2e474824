//! Regularized iterations with a discrepancy stopping rule:
//!
//! * Newton type: `u_{n+1} = u_n − (F′(u_n) + a_n I)⁻¹ G_n`
//! * gradient type: `u_{n+1} = u_n − α_n (F′(u_n) + a_n I)* G_n`
//! * simple: `u_{n+1} = u_n − α_n G_n`
//!
//! with `G_n = F(u_n) + a_n u_n − f_δ`. Each stops at the first `n` with
//! `‖F(u_n) − f_δ‖ ≤ C1 δ^γ`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::HilbertVector;
use crate::linalg::{operator_norm, self_adjoint_spectral_radius, solve_shifted};
use crate::operator::{LinearMap, NonlinearOperator};
use crate::report::{meets_threshold, SolveReport, StopStatus};
use crate::schedules::{DiscreteKind, DiscreteSchedule};

const LINEAR_TOL: f64 = 1e-12;
pub const DEFAULT_N_MAX: usize = 100_000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlphaRule {
    /// Largest step the band allows at each `n`.
    UpperEndpoint,
    Constant(f64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterConfig {
    pub c1: f64,
    /// Exponent `γ` in the threshold `C1 δ^γ`.
    pub exponent: f64,
    pub schedule: DiscreteSchedule,
    pub alpha: AlphaRule,
    pub n_max: Option<usize>,
    /// Bound on `‖F′‖`; taken from the operator or estimated when absent.
    pub m1: Option<f64>,
    /// Known `‖y‖`, used for the default iteration budget.
    pub y_norm: Option<f64>,
}

impl IterConfig {
    pub fn new(c1: f64, exponent: f64, schedule: DiscreteSchedule) -> Self {
        Self {
            c1,
            exponent,
            schedule,
            alpha: AlphaRule::UpperEndpoint,
            n_max: None,
            m1: None,
            y_norm: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c1 > 1.0 && self.c1.is_finite()) {
            return Err(Error::InvalidConfig(format!("C1 = {} must exceed 1", self.c1)));
        }
        if !(self.exponent > 0.0 && self.exponent <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "exponent = {} must lie in (0, 1]",
                self.exponent
            )));
        }
        if let AlphaRule::Constant(a) = self.alpha {
            if !(a > 0.0 && a.is_finite()) {
                return Err(Error::InvalidConfig(format!("step size {a} must be > 0")));
            }
        }
        if let Some(m) = self.m1 {
            if !(m >= 0.0 && m.is_finite()) {
                return Err(Error::InvalidConfig(format!("M1 = {m} must be >= 0")));
            }
        }
        Ok(())
    }

    pub fn threshold(&self, delta: f64) -> f64 {
        self.c1 * delta.powf(self.exponent)
    }
}

/// The index `n0` with `δ/a_{n0} ≤ ‖y‖/(C−1) < δ/a_{n0+1}`, where
/// `C = (C1 + 1)/2`.
pub fn horizon_index(schedule: &DiscreteSchedule, delta: f64, c1: f64, y_norm: f64) -> usize {
    let c = 0.5 * (c1 + 1.0);
    let level = delta * (c - 1.0) / y_norm;
    let first_below = schedule.index_of(level);
    let first_strictly_below = if schedule.a(first_below) < level {
        first_below
    } else {
        first_below.saturating_add(1)
    };
    first_strictly_below.saturating_sub(1)
}

pub fn default_n_max(cfg: &IterConfig, delta: f64) -> usize {
    match cfg.y_norm {
        Some(y) if y > 0.0 => (10 * horizon_index(&cfg.schedule, delta, cfg.c1, y)).clamp(100, DEFAULT_N_MAX),
        _ => DEFAULT_N_MAX,
    }
}

/// `a0/λ + ‖u0‖ + ‖y‖ + ‖y‖(C+1)/(C−1)`: the ball about `u0` that contains
/// the Newton iterates up to the stopping index.
pub fn confinement_radius(a0: f64, lambda: f64, u0_norm: f64, y_norm: f64, c: f64) -> f64 {
    a0 / lambda + u0_norm + y_norm + y_norm * (c + 1.0) / (c - 1.0)
}

/// One Newton-type step `u − (F′(u) + aI)⁻¹(F(u) + au − f)`.
pub fn newton_step<F: NonlinearOperator + ?Sized>(
    op: &F,
    f_delta: &HilbertVector,
    a: f64,
    u: &HilbertVector,
) -> Result<HilbertVector> {
    let mut g = op.apply(u);
    g.axpy(a, u);
    g.axpy(-1.0, f_delta);
    let jac = op.derivative(u).ok_or(Error::NoDerivative)?;
    let s = solve_shifted(jac.as_ref(), a, &g, LINEAR_TOL)?;
    let mut next = u.clone();
    next.axpy(-1.0, &s);
    Ok(next)
}

/// `‖I − α B*B‖` with `B = A + aI`, by power iteration on the self-adjoint
/// factor.
pub fn gradient_contraction_factor(jac: &dyn LinearMap, a: f64, alpha: f64, seed: u64) -> f64 {
    let shifted = |v: &HilbertVector| {
        let mut y = jac.apply(v);
        y.axpy(a, v);
        y
    };
    let shifted_adj = |v: &HilbertVector| {
        let mut y = jac.adjoint_apply(v);
        y.axpy(a, v);
        y
    };
    self_adjoint_spectral_radius(
        |v| {
            let mut y = v.clone();
            y.axpy(-alpha, &shifted_adj(&shifted(v)));
            y
        },
        jac.grid(),
        2000,
        seed,
    )
}

/// Upper endpoint of the admissible gradient step band.
pub fn gradient_step_upper(a: f64, m1: f64) -> f64 {
    2.0 / (a * a + (m1 + a) * (m1 + a))
}

/// Upper endpoint of the admissible simple-iteration step band.
pub fn simple_step_upper(a: f64, m1: f64) -> f64 {
    2.0 / (a + m1 + a)
}

fn check_kind(cfg: &IterConfig, expected: DiscreteKind) -> Result<()> {
    if cfg.schedule.kind != expected {
        return Err(Error::InvalidConfig(format!(
            "schedule kind {} used with the {} method",
            cfg.schedule.kind.name(),
            expected.name()
        )));
    }
    Ok(())
}

fn resolve_m1<F: NonlinearOperator + ?Sized>(
    op: &F,
    cfg: &IterConfig,
    u0: &HilbertVector,
) -> Result<(f64, bool)> {
    if let Some(m) = cfg.m1 {
        return Ok((m, false));
    }
    if let Some(m) = op.bounds().m1 {
        return Ok((m, false));
    }
    match op.derivative(u0) {
        Some(j) => Ok((1.1 * operator_norm(j.as_ref(), 200, 0), true)),
        None => Err(Error::MissingBound("M1")),
    }
}

struct Step<'a> {
    a: f64,
    u: &'a HilbertVector,
    g: &'a HilbertVector,
}

fn drive<F: NonlinearOperator + ?Sized>(
    method: &str,
    op: &F,
    f_delta: &HilbertVector,
    delta: f64,
    cfg: &IterConfig,
    u0: &HilbertVector,
    m1: Option<(f64, bool)>,
    mut step: impl FnMut(Step<'_>) -> Result<HilbertVector>,
) -> Result<SolveReport> {
    cfg.validate()?;
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::InvalidInput(format!("delta = {delta} must be > 0")));
    }
    op.grid().check_same(f_delta.grid())?;
    op.grid().check_same(u0.grid())?;
    let threshold = cfg.threshold(delta);
    if threshold <= delta {
        return Err(Error::InvalidConfig(format!(
            "C1 delta^gamma = {threshold} must exceed delta = {delta}"
        )));
    }
    let n_max = cfg.n_max.unwrap_or_else(|| default_n_max(cfg, delta));
    let mut u = u0.clone();
    let mut history = Vec::new();
    let mut a_last = cfg.schedule.a(0);
    let mut excursion = 0.0f64;
    for n in 0..=n_max {
        excursion = excursion.max(u.distance(u0));
        let fu = op.apply(&u);
        let residual = fu.sub(f_delta).norm();
        if !residual.is_finite() {
            return Err(Error::NonConvergence {
                iterations: n,
                residual,
                tol: threshold,
            });
        }
        history.push((n as f64, residual));
        if meets_threshold(residual, threshold) {
            return Ok(SolveReport {
                method: method.to_string(),
                u_final: u,
                t_stop: None,
                n_stop: Some(n),
                residual_history: history,
                residual_at_stop: residual,
                threshold,
                a_at_stop: a_last,
                status: StopStatus::StoppedByDiscrepancy,
                steps: n,
                rejected_steps: 0,
                m1_used: m1.map(|m| m.0),
                m1_estimated: m1.is_some_and(|m| m.1),
                max_excursion: excursion,
            });
        }
        if n == n_max {
            return Err(Error::HorizonExceeded {
                n_max,
                residual,
                threshold,
            });
        }
        let a = cfg.schedule.a(n);
        let mut g = fu;
        g.axpy(a, &u);
        g.axpy(-1.0, f_delta);
        u = step(Step { a, u: &u, g: &g })?;
        a_last = a;
    }
    unreachable!("loop returns at n = n_max")
}

pub fn iter_newton<F: NonlinearOperator + ?Sized>(
    op: &F,
    f_delta: &HilbertVector,
    delta: f64,
    cfg: &IterConfig,
    u0: &HilbertVector,
) -> Result<SolveReport> {
    check_kind(cfg, DiscreteKind::NewtonIter)?;
    drive("iter_newton", op, f_delta, delta, cfg, u0, None, |s| {
        let jac = op.derivative(s.u).ok_or(Error::NoDerivative)?;
        let d = solve_shifted(jac.as_ref(), s.a, s.g, LINEAR_TOL)?;
        let mut next = s.u.clone();
        next.axpy(-1.0, &d);
        Ok(next)
    })
}

fn step_size(rule: AlphaRule, upper: f64, floor: f64) -> Result<f64> {
    let alpha = match rule {
        AlphaRule::UpperEndpoint => upper,
        AlphaRule::Constant(a) => a,
    };
    if !(floor > 0.0) || !(upper >= floor) || alpha > upper || alpha < floor {
        return Err(Error::InvalidStepSize {
            lower: floor,
            upper,
        });
    }
    Ok(alpha)
}

fn step_floor(rule: AlphaRule, upper0: f64) -> f64 {
    match rule {
        AlphaRule::UpperEndpoint => 0.5 * upper0,
        AlphaRule::Constant(a) => a,
    }
}

pub fn iter_gradient<F: NonlinearOperator + ?Sized>(
    op: &F,
    f_delta: &HilbertVector,
    delta: f64,
    cfg: &IterConfig,
    u0: &HilbertVector,
) -> Result<SolveReport> {
    check_kind(cfg, DiscreteKind::GradientIter)?;
    cfg.validate()?;
    let (m1, estimated) = resolve_m1(op, cfg, u0)?;
    let floor = step_floor(cfg.alpha, gradient_step_upper(cfg.schedule.a(0), m1));
    drive("iter_gradient", op, f_delta, delta, cfg, u0, Some((m1, estimated)), |s| {
        let alpha = step_size(cfg.alpha, gradient_step_upper(s.a, m1), floor)?;
        let jac = op.derivative(s.u).ok_or(Error::NoDerivative)?;
        let mut dir = jac.adjoint_apply(s.g);
        dir.axpy(s.a, s.g);
        let mut next = s.u.clone();
        next.axpy(-alpha, &dir);
        Ok(next)
    })
}

pub fn iter_simple<F: NonlinearOperator + ?Sized>(
    op: &F,
    f_delta: &HilbertVector,
    delta: f64,
    cfg: &IterConfig,
    u0: &HilbertVector,
) -> Result<SolveReport> {
    check_kind(cfg, DiscreteKind::SimpleIter)?;
    cfg.validate()?;
    let (m1, estimated) = resolve_m1(op, cfg, u0)?;
    let floor = step_floor(cfg.alpha, simple_step_upper(cfg.schedule.a(0), m1));
    drive("iter_simple", op, f_delta, delta, cfg, u0, Some((m1, estimated)), |s| {
        let alpha = step_size(cfg.alpha, simple_step_upper(s.a, m1), floor)?;
        let mut next = s.u.clone();
        next.axpy(-alpha, s.g);
        Ok(next)
    })
}
