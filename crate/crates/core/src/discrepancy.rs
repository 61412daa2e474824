//! Choice of the regularization parameter by the discrepancy principle
//! `‖F(V_{δ,a}) − f_δ‖ = C δ^γ`, its variant centered at a reference point
//! `ū`, and an acceptance test for approximate regularized solutions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::HilbertVector;
use crate::operator::{NonlinearOperator, Shifted};
use crate::regularized::{bracket_for_target_tol, defect, phi_psi_tol, PhiPsi};

pub const MAX_BISECTION_STEPS: usize = 200;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DPConfig {
    /// Discrepancy constant, `> 1`.
    pub c: f64,
    /// Exponent in `(0, 1]`.
    pub gamma: f64,
    /// Tolerated inexactness `θδ` of an approximate regularized solution.
    pub theta: f64,
    /// Residual window `[C1 δ^γ, C2 δ^γ]` for accepting candidates.
    pub c1: f64,
    pub c2: f64,
    /// Relative tolerance on `φ(a) = C δ^γ`.
    pub dp_tol: f64,
    /// Starting point of the bracket search.
    pub a_init: f64,
}

impl Default for DPConfig {
    fn default() -> Self {
        Self::with_constants(1.01, 0.9)
    }
}

impl DPConfig {
    /// Defaults with the given `C` and `γ`; `C1 = C/2`, `C2 = 2C`, `θ = 1`.
    pub fn with_constants(c: f64, gamma: f64) -> Self {
        Self {
            c,
            gamma,
            theta: 1.0,
            c1: c / 2.0,
            c2: 2.0 * c,
            dp_tol: 1e-6,
            a_init: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if !(self.c > 1.0 && self.c.is_finite()) {
            return bad(format!("C = {} must exceed 1", self.c));
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return bad(format!("gamma = {} must lie in (0, 1]", self.gamma));
        }
        if !(self.theta > 0.0) {
            return bad(format!("theta = {} must be > 0", self.theta));
        }
        if !(self.c1 > 0.0 && self.c1 < self.c2) {
            return bad(format!("need 0 < C1 < C2, got {} and {}", self.c1, self.c2));
        }
        if !(self.dp_tol > 0.0 && self.dp_tol < 1.0) {
            return bad(format!("dp_tol = {} must lie in (0, 1)", self.dp_tol));
        }
        if !(self.a_init > 0.0 && self.a_init.is_finite()) {
            return bad(format!("a_init = {} must be > 0", self.a_init));
        }
        Ok(())
    }

    pub fn target(&self, delta: f64) -> f64 {
        self.c * delta.powf(self.gamma)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DPResult {
    pub a_delta: f64,
    pub v: HilbertVector,
    /// `‖F(V) − f_δ‖` at the returned `V`.
    pub achieved_residual: f64,
    pub target: f64,
    /// `‖F(V) + aV − f_δ‖`
    pub inner_residual: f64,
    pub bracket_evals: usize,
    pub bisection_steps: usize,
}

fn inner_tolerance(cfg: &DPConfig, delta: f64, target: f64) -> f64 {
    f64::min(1e-3 * cfg.dp_tol * target, 1e-3 * cfg.theta * delta)
}

/// Find `a(δ)` with `‖F(V_{δ,a(δ)}) − f_δ‖ = C δ^γ` by bracketing and bisection.
///
/// Returns [`Error::AlreadyCompatible`] when `‖F(0) − f_δ‖ ≤ C δ^γ`, in which
/// case `u = 0` already satisfies the discrepancy test.
pub fn solve_dp<F: NonlinearOperator + ?Sized>(
    op: &F,
    f_delta: &HilbertVector,
    delta: f64,
    cfg: &DPConfig,
) -> Result<DPResult> {
    cfg.validate()?;
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::InvalidInput(format!("delta = {delta} must be > 0")));
    }
    op.grid().check_same(f_delta.grid())?;
    let target = cfg.target(delta);
    if target <= delta {
        return Err(Error::InvalidConfig(format!(
            "C delta^gamma = {target} must exceed delta = {delta}"
        )));
    }
    let r0 = op.apply(&op.grid().zeros()).sub(f_delta).norm();
    if r0 <= target {
        return Err(Error::AlreadyCompatible {
            residual: r0,
            target,
        });
    }
    let tol = inner_tolerance(cfg, delta, target);
    let bracket = bracket_for_target_tol(op, f_delta, target, cfg.a_init, Some(tol))?;
    let evals = bracket.evaluations;
    let close = |p: &PhiPsi| (p.discrepancy - target).abs() <= cfg.dp_tol * target;
    let finish = |p: PhiPsi, steps: usize| DPResult {
        a_delta: p.a,
        achieved_residual: p.discrepancy,
        target,
        inner_residual: p.solution.residual,
        v: p.solution.v,
        bracket_evals: evals,
        bisection_steps: steps,
    };
    let (mut lo, mut hi) = (bracket.lo, bracket.hi);
    if close(&hi) {
        return Ok(finish(hi, 0));
    }
    for step in 1..=MAX_BISECTION_STEPS {
        let mid = 0.5 * (lo.a + hi.a);
        if mid <= lo.a || mid >= hi.a {
            break;
        }
        let warm = if target - lo.phi < hi.phi - target {
            &lo.solution.v
        } else {
            &hi.solution.v
        };
        let p = phi_psi_tol(op, f_delta, mid, Some(tol), Some(warm))?;
        if close(&p) {
            return Ok(finish(p, step));
        }
        if p.phi < target {
            lo = p;
        } else {
            hi = p;
        }
    }
    let best = if target - lo.phi < hi.phi - target { lo } else { hi };
    Err(Error::NonConvergence {
        iterations: MAX_BISECTION_STEPS,
        residual: (best.discrepancy - target).abs() / target,
        tol: cfg.dp_tol,
    })
}

/// Discrepancy principle for `F(Ṽ) + a(Ṽ − ū) = f_δ`, solved through
/// `w ↦ F(w + ū)` and shifted back.
pub fn solve_dp_shifted<F: NonlinearOperator + ?Sized>(
    op: &F,
    f_delta: &HilbertVector,
    delta: f64,
    cfg: &DPConfig,
    u_bar: &HilbertVector,
) -> Result<DPResult> {
    let shifted = Shifted::new(op, u_bar.clone())?;
    let mut res = solve_dp(&shifted, f_delta, delta, cfg)?;
    res.v = res.v.add(u_bar);
    Ok(res)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AcceptanceReport {
    /// `‖F(v) + αv − f_δ‖`
    pub regularized_residual: f64,
    /// `θδ`
    pub regularized_bound: f64,
    /// `‖F(v) − f_δ‖`
    pub discrepancy: f64,
    pub window_lower: f64,
    pub window_upper: f64,
    pub regularized_ok: bool,
    pub window_ok: bool,
    pub accepted: bool,
}

/// Check `‖F(v) + αv − f_δ‖ ≤ θδ` and `C1 δ^γ ≤ ‖F(v) − f_δ‖ ≤ C2 δ^γ`.
pub fn accept_candidate<F: NonlinearOperator + ?Sized>(
    op: &F,
    f_delta: &HilbertVector,
    delta: f64,
    v: &HilbertVector,
    alpha: f64,
    cfg: &DPConfig,
) -> Result<AcceptanceReport> {
    cfg.validate()?;
    if !(cfg.gamma < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "acceptance needs gamma < 1, got {}",
            cfg.gamma
        )));
    }
    if !(alpha > 0.0) || !(delta > 0.0) {
        return Err(Error::InvalidInput(format!(
            "alpha = {alpha} and delta = {delta} must be > 0"
        )));
    }
    op.grid().check_same(v.grid())?;
    let regularized_residual = defect(op, f_delta, alpha, v).norm();
    let discrepancy = op.apply(v).sub(f_delta).norm();
    let scale = delta.powf(cfg.gamma);
    let regularized_bound = cfg.theta * delta;
    let (window_lower, window_upper) = (cfg.c1 * scale, cfg.c2 * scale);
    let regularized_ok = regularized_residual <= regularized_bound;
    let window_ok = window_lower <= discrepancy && discrepancy <= window_upper;
    Ok(AcceptanceReport {
        regularized_residual,
        regularized_bound,
        discrepancy,
        window_lower,
        window_upper,
        regularized_ok,
        window_ok,
        accepted: regularized_ok && window_ok,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::Grid;
    use crate::operator::AffineOperator;
    use crate::regularized::solve_regularized;
    use approx::assert_relative_eq;

    fn pq() -> (Grid, HilbertVector, HilbertVector) {
        let g = Grid::euclidean(2).unwrap();
        let p = g.vector(vec![1.0, 0.0]).unwrap();
        let q = g.vector(vec![0.0, 1.0]).unwrap();
        (g, p, q)
    }

    #[test]
    fn scalar_identity() {
        // φ(a) = a/(1+a) = 0.1 at a = 1/9 when f_δ = 1; choose C δ^γ = 0.1.
        let g = Grid::euclidean(1).unwrap();
        let f = AffineOperator::identity(&g);
        let mut cfg = DPConfig::with_constants(2.0, 1.0);
        cfg.dp_tol = 1e-12;
        let r = solve_dp(&f, &g.constant(1.0), 0.05, &cfg).unwrap();
        assert_relative_eq!(r.a_delta, 1.0 / 9.0, max_relative = 1e-10);
        assert_relative_eq!(r.v.values()[0], 0.9, max_relative = 1e-10);
        assert!((r.achieved_residual - 0.1).abs() <= 1e-12 * 0.1);
    }

    #[test]
    fn rank_one_closed_form() {
        let (_, p, q) = pq();
        let f = AffineOperator::rank_one(&p);
        let c_const = 2f64.sqrt();
        let mut cfg = DPConfig::with_constants(c_const, 1.0);
        cfg.dp_tol = 1e-13;
        for delta in [0.1, 0.01] {
            let fd = p.add(&q.scale(delta));
            let r = solve_dp(&f, &fd, delta, &cfg).unwrap();
            let c = (c_const * c_const - 1.0).sqrt();
            let expected = c * delta / (1.0 - c * delta);
            assert_relative_eq!(r.a_delta, expected, max_relative = 1e-10);
            let v_expected = p.scale(1.0 / (1.0 + expected)).add(&q.scale(delta / expected));
            assert!(r.v.distance(&v_expected) <= 1e-9);
        }
    }

    #[test]
    fn default_tolerance_is_met() {
        let (_, p, q) = pq();
        let f = AffineOperator::rank_one(&p);
        let cfg = DPConfig::with_constants(1.5, 0.9);
        let fd = p.add(&q.scale(0.01));
        let r = solve_dp(&f, &fd, 0.01, &cfg).unwrap();
        assert!((r.achieved_residual - r.target).abs() <= cfg.dp_tol * r.target);
    }

    #[test]
    fn already_compatible() {
        let g = Grid::euclidean(1).unwrap();
        let f = AffineOperator::identity(&g);
        let cfg = DPConfig::with_constants(2.0, 1.0);
        assert!(matches!(
            solve_dp(&f, &g.constant(0.05), 0.05, &cfg),
            Err(Error::AlreadyCompatible { .. })
        ));
    }

    #[test]
    fn target_must_exceed_delta() {
        let g = Grid::euclidean(1).unwrap();
        let f = AffineOperator::identity(&g);
        // C δ^γ = 2.02 < δ = 4
        let cfg = DPConfig::with_constants(1.01, 0.5);
        assert!(matches!(
            solve_dp(&f, &g.constant(100.0), 4.0, &cfg),
            Err(Error::InvalidConfig(_))
        ));
    }

    #[test]
    fn config_ranges() {
        assert!(DPConfig::with_constants(0.5, 0.9).validate().is_err());
        assert!(DPConfig::with_constants(1.5, 0.0).validate().is_err());
        assert!(DPConfig::with_constants(1.5, 1.1).validate().is_err());
        assert!(DPConfig::default().validate().is_ok());
    }

    #[test]
    fn shifted_with_zero_center_matches_plain() {
        let (g, p, q) = pq();
        let f = AffineOperator::rank_one(&p);
        let cfg = DPConfig::default();
        let fd = p.add(&q.scale(0.05));
        let a = solve_dp(&f, &fd, 0.05, &cfg).unwrap();
        let b = solve_dp_shifted(&f, &fd, 0.05, &cfg, &g.zeros()).unwrap();
        assert_eq!(a.a_delta, b.a_delta);
        assert_eq!(a.v, b.v);
    }

    #[test]
    fn shifted_at_solution_is_compatible() {
        let g = Grid::euclidean(3).unwrap();
        let f = AffineOperator::identity(&g);
        let fd = g.vector(vec![1.0, 2.0, 3.0]).unwrap();
        assert!(matches!(
            solve_dp_shifted(&f, &fd, 0.01, &DPConfig::default(), &fd),
            Err(Error::AlreadyCompatible { residual, .. }) if residual == 0.0
        ));
    }

    #[test]
    fn accepts_exact_and_rejects_perturbed() {
        let (_, p, q) = pq();
        let f = AffineOperator::rank_one(&p);
        let cfg = DPConfig::default();
        let delta = 0.01;
        let fd = p.add(&q.scale(delta));
        let dp = solve_dp(&f, &fd, delta, &cfg).unwrap();
        let v = solve_regularized(&f, &fd, dp.a_delta, Some(cfg.theta * delta * 1e-3), None)
            .unwrap()
            .v;
        let rep = accept_candidate(&f, &fd, delta, &v, dp.a_delta, &cfg).unwrap();
        assert!(rep.accepted, "{rep:?}");

        let w = p.add(&q).scale(1.0 / 2f64.sqrt());
        let bumped = v.add(&w.scale(10.0 * cfg.theta * delta / dp.a_delta));
        let rep = accept_candidate(&f, &fd, delta, &bumped, dp.a_delta, &cfg).unwrap();
        assert!(!rep.regularized_ok);
        assert!(rep.regularized_residual >= 10.0 * cfg.theta * delta * (1.0 - 1e-9) - 1e-3 * delta);
    }

    #[test]
    fn zero_candidate_outside_window() {
        let (g, p, q) = pq();
        let f = AffineOperator::rank_one(&p);
        let cfg = DPConfig::default();
        let fd = p.add(&q.scale(0.01));
        let rep = accept_candidate(&f, &fd, 0.01, &g.zeros(), 0.1, &cfg).unwrap();
        assert!(!rep.window_ok);
        assert!(rep.discrepancy > rep.window_upper);
        assert!(!rep.accepted);
    }

    #[test]
    fn acceptance_needs_gamma_below_one() {
        let (g, p, _) = pq();
        let f = AffineOperator::rank_one(&p);
        let cfg = DPConfig::with_constants(1.5, 1.0);
        assert!(matches!(
            accept_candidate(&f, &p, 0.01, &g.zeros(), 0.1, &cfg),
            Err(Error::InvalidConfig(_))
        ));
    }
}
