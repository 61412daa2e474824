//! The regularized equation `F(V) + aV = f_δ` for fixed `a > 0`, and the
//! functions `ψ(a) = ‖V_{δ,a}‖`, `φ(a) = a ψ(a) = ‖F(V_{δ,a}) − f_δ‖`.
//!
//! For monotone `F` the regularized equation has exactly one solution, `φ` is
//! strictly increasing and bounded by `‖F(0) − f_δ‖`, and `ψ` is decreasing.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::HilbertVector;
use crate::linalg::solve_shifted;
use crate::operator::NonlinearOperator;

pub const MAX_NEWTON_STEPS: usize = 200;
pub const MAX_RELAXATION_STEPS: usize = 10_000;
const MIN_DAMPING: f64 = 1e-4;
const LINEAR_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegularizedSolution {
    pub v: HilbertVector,
    pub a: f64,
    /// `‖F(V) + aV − f_δ‖`
    pub residual: f64,
    pub inner_iterations: usize,
}

/// `max(1e-12, 1e-4 · a · ‖f_δ‖)`
pub fn default_tolerance(a: f64, f_norm: f64) -> f64 {
    f64::max(1e-12, 1e-4 * a * f_norm)
}

/// `F(v) + a v − f`
pub fn defect<F: NonlinearOperator + ?Sized>(
    op: &F,
    f_delta: &HilbertVector,
    a: f64,
    v: &HilbertVector,
) -> HilbertVector {
    let mut g = op.apply(v);
    g.axpy(a, v);
    g.axpy(-1.0, f_delta);
    g
}

/// Residual level indistinguishable from rounding given the magnitudes involved.
fn roundoff_floor(fv: &HilbertVector, a: f64, v: &HilbertVector, f: &HilbertVector) -> f64 {
    8.0 * f64::EPSILON * (fv.norm() + a * v.norm() + f.norm())
}

/// A line search that cannot decrease the residual below this multiple of
/// the rounding level is treated as converged.
const STAGNATION_FACTOR: f64 = 125.0;

/// Solve `F(V) + aV = f_δ` to `‖F(V) + aV − f_δ‖ ≤ tol`.
///
/// Uses damped Newton when `F` has a derivative, otherwise the relaxation
/// `V ← V − G(V)/(2a + M1)` which needs the declared bound `M1`.
pub fn solve_regularized<F: NonlinearOperator + ?Sized>(
    op: &F,
    f_delta: &HilbertVector,
    a: f64,
    tol: Option<f64>,
    warm_start: Option<&HilbertVector>,
) -> Result<RegularizedSolution> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::InvalidInput(format!("regularization a = {a} must be > 0")));
    }
    op.grid().check_same(f_delta.grid())?;
    let tol = tol.unwrap_or_else(|| default_tolerance(a, f_delta.norm()));
    if !(tol > 0.0) {
        return Err(Error::InvalidInput(format!("tolerance {tol} must be > 0")));
    }
    let v0 = match warm_start {
        Some(w) => {
            op.grid().check_same(w.grid())?;
            w.clone()
        }
        None => op.grid().zeros(),
    };
    if op.derivative(&v0).is_some() {
        damped_newton(op, f_delta, a, tol, v0)
    } else {
        relaxation(op, f_delta, a, tol, v0)
    }
}

fn damped_newton<F: NonlinearOperator + ?Sized>(
    op: &F,
    f: &HilbertVector,
    a: f64,
    tol: f64,
    mut v: HilbertVector,
) -> Result<RegularizedSolution> {
    let mut fv = op.apply(&v);
    let mut g = fv.clone();
    g.axpy(a, &v);
    g.axpy(-1.0, f);
    let mut r = g.norm();
    for k in 0..=MAX_NEWTON_STEPS {
        if r <= tol.max(roundoff_floor(&fv, a, &v, f)) {
            return Ok(RegularizedSolution {
                v,
                a,
                residual: r,
                inner_iterations: k,
            });
        }
        if k == MAX_NEWTON_STEPS {
            break;
        }
        let jac = op.derivative(&v).ok_or(Error::NoDerivative)?;
        let step = solve_shifted(jac.as_ref(), a, &g, LINEAR_TOL)?;
        let mut lambda = 1.0;
        let accepted = loop {
            let mut trial = v.clone();
            trial.axpy(-lambda, &step);
            let f_trial = op.apply(&trial);
            let mut g_trial = f_trial.clone();
            g_trial.axpy(a, &trial);
            g_trial.axpy(-1.0, f);
            let r_trial = g_trial.norm();
            if r_trial < r {
                break Some((trial, f_trial, g_trial, r_trial));
            }
            lambda *= 0.5;
            if lambda < MIN_DAMPING {
                break None;
            }
        };
        match accepted {
            Some((trial, f_trial, g_trial, r_trial)) => {
                v = trial;
                fv = f_trial;
                g = g_trial;
                r = r_trial;
            }
            None if r <= tol.max(STAGNATION_FACTOR * roundoff_floor(&fv, a, &v, f)) => {
                return Ok(RegularizedSolution {
                    v,
                    a,
                    residual: r,
                    inner_iterations: k + 1,
                })
            }
            None => {
                return Err(Error::NonConvergence {
                    iterations: k + 1,
                    residual: r,
                    tol,
                })
            }
        }
    }
    Err(Error::NonConvergence {
        iterations: MAX_NEWTON_STEPS,
        residual: r,
        tol,
    })
}

fn relaxation<F: NonlinearOperator + ?Sized>(
    op: &F,
    f: &HilbertVector,
    a: f64,
    tol: f64,
    mut v: HilbertVector,
) -> Result<RegularizedSolution> {
    let m1 = op.bounds().require_m1()?;
    let s = 1.0 / (2.0 * a + m1);
    let mut r = f64::INFINITY;
    for k in 0..=MAX_RELAXATION_STEPS {
        let fv = op.apply(&v);
        let mut g = fv.clone();
        g.axpy(a, &v);
        g.axpy(-1.0, f);
        r = g.norm();
        if r <= tol.max(roundoff_floor(&fv, a, &v, f)) {
            return Ok(RegularizedSolution {
                v,
                a,
                residual: r,
                inner_iterations: k,
            });
        }
        if !r.is_finite() {
            break;
        }
        v.axpy(-s, &g);
    }
    Err(Error::NonConvergence {
        iterations: MAX_RELAXATION_STEPS,
        residual: r,
        tol,
    })
}

/// `ψ(a)`, `φ(a)` together with the solution they were computed from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhiPsi {
    pub a: f64,
    pub phi: f64,
    pub psi: f64,
    /// `‖F(V) − f_δ‖` measured directly; equals `phi` up to the inner tolerance.
    pub discrepancy: f64,
    pub solution: RegularizedSolution,
}

/// Inner tolerance used when evaluating `φ` and `ψ`.
pub fn phi_psi_tolerance(a: f64, f_norm: f64) -> f64 {
    f64::max(1e-14, 1e-10 * a * f_norm)
}

pub fn phi_psi<F: NonlinearOperator + ?Sized>(
    op: &F,
    f_delta: &HilbertVector,
    a: f64,
) -> Result<PhiPsi> {
    phi_psi_warm(op, f_delta, a, None)
}

pub fn phi_psi_warm<F: NonlinearOperator + ?Sized>(
    op: &F,
    f_delta: &HilbertVector,
    a: f64,
    warm_start: Option<&HilbertVector>,
) -> Result<PhiPsi> {
    phi_psi_tol(op, f_delta, a, None, warm_start)
}

/// As [`phi_psi_warm`] with an explicit inner tolerance.
pub fn phi_psi_tol<F: NonlinearOperator + ?Sized>(
    op: &F,
    f_delta: &HilbertVector,
    a: f64,
    tol: Option<f64>,
    warm_start: Option<&HilbertVector>,
) -> Result<PhiPsi> {
    let tol = tol.unwrap_or_else(|| phi_psi_tolerance(a, f_delta.norm()));
    let sol = solve_regularized(op, f_delta, a, Some(tol), warm_start)?;
    Ok(evaluate_phi_psi(op, f_delta, sol))
}

pub(crate) fn evaluate_phi_psi<F: NonlinearOperator + ?Sized>(
    op: &F,
    f_delta: &HilbertVector,
    sol: RegularizedSolution,
) -> PhiPsi {
    let psi = sol.v.norm();
    let discrepancy = op.apply(&sol.v).sub(f_delta).norm();
    PhiPsi {
        a: sol.a,
        phi: sol.a * psi,
        psi,
        discrepancy,
        solution: sol,
    }
}

/// `a_lo < a_hi` with `φ(a_lo) < target ≤ φ(a_hi)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Bracket {
    pub lo: PhiPsi,
    pub hi: PhiPsi,
    pub evaluations: usize,
}

pub const MAX_BRACKET_STEPS: usize = 200;

/// Bracket the root of `φ(a) = target` by doubling or halving from `a_init`.
pub fn bracket_for_target<F: NonlinearOperator + ?Sized>(
    op: &F,
    f_delta: &HilbertVector,
    target: f64,
    a_init: f64,
) -> Result<Bracket> {
    bracket_for_target_tol(op, f_delta, target, a_init, None)
}

pub fn bracket_for_target_tol<F: NonlinearOperator + ?Sized>(
    op: &F,
    f_delta: &HilbertVector,
    target: f64,
    a_init: f64,
    inner_tol: Option<f64>,
) -> Result<Bracket> {
    if !(target > 0.0) || !(a_init > 0.0 && a_init.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "target {target} and a_init {a_init} must be positive"
        )));
    }
    let sup = op.apply(&op.grid().zeros()).sub(f_delta).norm();
    if target >= sup {
        return Err(Error::NoRoot { target, sup });
    }
    let mut evaluations = 1;
    let first = phi_psi_tol(op, f_delta, a_init, inner_tol, None)?;
    if first.phi < target {
        let mut lo = first;
        for _ in 0..MAX_BRACKET_STEPS {
            let p = phi_psi_tol(op, f_delta, 2.0 * lo.a, inner_tol, Some(&lo.solution.v))?;
            evaluations += 1;
            if p.phi >= target {
                return Ok(Bracket {
                    lo,
                    hi: p,
                    evaluations,
                });
            }
            lo = p;
        }
    } else {
        let mut hi = first;
        for _ in 0..MAX_BRACKET_STEPS {
            let p = phi_psi_tol(op, f_delta, 0.5 * hi.a, inner_tol, Some(&hi.solution.v))?;
            evaluations += 1;
            if p.phi < target {
                return Ok(Bracket {
                    lo: p,
                    hi,
                    evaluations,
                });
            }
            hi = p;
        }
    }
    Err(Error::BudgetExceeded {
        steps: MAX_BRACKET_STEPS,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::Grid;
    use crate::operator::{AffineOperator, DenseMap, FnOperator, OperatorBounds};
    use approx::assert_abs_diff_eq;

    #[test]
    fn zero_operator() {
        let g = Grid::trapezoid(5).unwrap();
        let f = AffineOperator::zero(&g);
        let s = solve_regularized(&f, &g.constant(3.0), 0.5, None, None).unwrap();
        for v in s.v.values() {
            assert_abs_diff_eq!(*v, 6.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn identity_operator() {
        let g = Grid::trapezoid(5).unwrap();
        let f = AffineOperator::identity(&g);
        let s = solve_regularized(&f, &g.constant(2.0), 1.0, None, None).unwrap();
        for v in s.v.values() {
            assert_abs_diff_eq!(*v, 1.0, epsilon = 1e-12);
        }
        let p = phi_psi(&f, &g.constant(2.0), 1.0).unwrap();
        assert_abs_diff_eq!(p.psi, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.phi, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn phi_approaches_residual_at_zero() {
        let g = Grid::euclidean(1).unwrap();
        let f = AffineOperator::identity(&g);
        let p = phi_psi(&f, &g.constant(2.0), 100.0).unwrap();
        assert_abs_diff_eq!(p.phi, 200.0 / 101.0, epsilon = 1e-12);
        assert!(p.phi < 2.0);
    }

    #[test]
    fn relaxation_without_derivative() {
        let g = Grid::euclidean(3).unwrap();
        let f = FnOperator::new(g.clone(), |u| u.map(|x| x.atan()))
            .with_bounds(OperatorBounds::with_m1(1.0));
        let s = solve_regularized(&f, &g.constant(0.7), 0.5, Some(1e-12), None).unwrap();
        let r = defect(&f, &g.constant(0.7), 0.5, &s.v).norm();
        assert!(r <= 1e-12);
        assert!(s.inner_iterations > 1);
    }

    #[test]
    fn relaxation_needs_m1() {
        let g = Grid::euclidean(3).unwrap();
        let f = FnOperator::new(g.clone(), |u| u.map(|x| x.atan()));
        assert_eq!(
            solve_regularized(&f, &g.constant(0.7), 0.5, None, None).unwrap_err(),
            Error::MissingBound("M1")
        );
    }

    #[test]
    fn warm_start_gives_same_solution() {
        let g = Grid::euclidean(4).unwrap();
        let f = FnOperator::new(g.clone(), |u| u.map(|x| x * x * x + x))
            .with_derivative(|u| {
                let mut d = DenseMap::zero(u.grid());
                d.add_diagonal(&u.values().iter().map(|x| 3.0 * x * x + 1.0).collect::<Vec<_>>());
                d
            });
        let rhs = g.vector(vec![1.0, -2.0, 5.0, 0.1]).unwrap();
        let tol = 1e-11;
        let cold = solve_regularized(&f, &rhs, 0.01, Some(tol), None).unwrap();
        let warm = solve_regularized(&f, &rhs, 0.01, Some(tol), Some(&g.constant(3.0))).unwrap();
        assert!(cold.v.distance(&warm.v) <= 10.0 * tol);
    }

    #[test]
    fn bracket_identity_closed_form() {
        // φ(a) = 2a/(1+a)
        let g = Grid::euclidean(1).unwrap();
        let f = AffineOperator::identity(&g);
        let b = bracket_for_target(&f, &g.constant(2.0), 1.0, 0.25).unwrap();
        assert_eq!(b.lo.a, 0.5);
        assert_eq!(b.hi.a, 1.0);
        assert_eq!(b.evaluations, 3);
        assert!(b.lo.phi < 1.0 && b.hi.phi >= 1.0);

        let down = bracket_for_target(&f, &g.constant(2.0), 1.0, 8.0).unwrap();
        assert!(down.lo.phi < 1.0 && down.hi.phi >= 1.0);
        assert_eq!(down.hi.a, 2.0 * down.lo.a);
    }

    #[test]
    fn bracket_rejects_unreachable_target() {
        let g = Grid::euclidean(1).unwrap();
        let f = AffineOperator::identity(&g);
        assert_eq!(
            bracket_for_target(&f, &g.constant(2.0), 2.5, 0.25).unwrap_err(),
            Error::NoRoot {
                target: 2.5,
                sup: 2.0
            }
        );
    }

    #[test]
    fn rejects_nonpositive_a() {
        let g = Grid::euclidean(1).unwrap();
        let f = AffineOperator::identity(&g);
        assert!(solve_regularized(&f, &g.constant(1.0), 0.0, None, None).is_err());
    }
}
