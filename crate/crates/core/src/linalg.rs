//! Shifted linear solves `(A + aI)x = b` and power-iteration norm estimates.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::hilbert::HilbertVector;
use crate::operator::LinearMap;
use crate::rng::{seeded, unit_direction};

/// Largest dimension handled by dense LU; larger systems use CGNR.
pub const DENSE_LIMIT: usize = 2000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum ShiftedMethod {
    #[default]
    Auto,
    Dense,
    /// Conjugate gradients on the normal equations `B*B x = B*b`, `B = A + aI`.
    Cgnr,
}

/// Solve `(A + aI) x = rhs` to relative residual `tol`.
///
/// For the derivative of a monotone operator `‖(A + aI)⁻¹‖ ≤ 1/a`; the
/// iterative path treats a violation of that bound as a failed solve.
pub fn solve_shifted(a_map: &dyn LinearMap, a: f64, rhs: &HilbertVector, tol: f64) -> Result<HilbertVector> {
    solve_shifted_with(a_map, a, rhs, tol, ShiftedMethod::Auto)
}

pub fn solve_shifted_with(
    a_map: &dyn LinearMap,
    a: f64,
    rhs: &HilbertVector,
    tol: f64,
    method: ShiftedMethod,
) -> Result<HilbertVector> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::InvalidInput(format!("shift a = {a} must be positive")));
    }
    a_map.grid().check_same(rhs.grid())?;
    let rhs_norm = rhs.norm();
    if rhs_norm == 0.0 {
        return Ok(rhs.grid().zeros());
    }
    let method = match method {
        ShiftedMethod::Auto if a_map.dimension() <= DENSE_LIMIT => ShiftedMethod::Dense,
        ShiftedMethod::Auto => ShiftedMethod::Cgnr,
        m => m,
    };
    let x = match method {
        ShiftedMethod::Dense => dense_solve(a_map, a, rhs)?,
        _ => {
            let x = cgnr(a_map, a, rhs, tol)?;
            if x.norm() > rhs_norm / a * (1.0 + 1e-8) {
                return Err(Error::SolveFailed {
                    residual: f64::NAN,
                    tol,
                });
            }
            x
        }
    };
    let residual = shifted_residual(a_map, a, &x, rhs) / rhs_norm;
    if residual.is_finite() && residual <= tol {
        Ok(x)
    } else {
        Err(Error::SolveFailed { residual, tol })
    }
}

fn shifted_apply(a_map: &dyn LinearMap, a: f64, x: &HilbertVector) -> HilbertVector {
    let mut y = a_map.apply(x);
    y.axpy(a, x);
    y
}

fn shifted_adjoint(a_map: &dyn LinearMap, a: f64, x: &HilbertVector) -> HilbertVector {
    let mut y = a_map.adjoint_apply(x);
    y.axpy(a, x);
    y
}

fn shifted_residual(a_map: &dyn LinearMap, a: f64, x: &HilbertVector, rhs: &HilbertVector) -> f64 {
    shifted_apply(a_map, a, x).sub(rhs).norm()
}

fn dense_solve(a_map: &dyn LinearMap, a: f64, rhs: &HilbertVector) -> Result<HilbertVector> {
    let n = a_map.dimension();
    let m = a_map.to_matrix() + DMatrix::identity(n, n) * a;
    let b = DVector::from_column_slice(rhs.values());
    match m.lu().solve(&b) {
        Some(x) => Ok(rhs.with_values(x.as_slice().to_vec())),
        None => Err(Error::SolveFailed {
            residual: f64::INFINITY,
            tol: 0.0,
        }),
    }
}

fn cgnr(a_map: &dyn LinearMap, a: f64, rhs: &HilbertVector, tol: f64) -> Result<HilbertVector> {
    let n = a_map.dimension();
    let rhs_norm = rhs.norm();
    let mut x = rhs.grid().zeros();
    let mut r = rhs.clone();
    let mut z = shifted_adjoint(a_map, a, &r);
    let mut p = z.clone();
    let mut zz = z.dot(&z);
    for _ in 0..(10 * n).max(100) {
        if r.norm() <= tol * rhs_norm {
            return Ok(x);
        }
        let w = shifted_apply(a_map, a, &p);
        let ww = w.dot(&w);
        if ww == 0.0 {
            break;
        }
        let alpha = zz / ww;
        x.axpy(alpha, &p);
        r.axpy(-alpha, &w);
        z = shifted_adjoint(a_map, a, &r);
        let zz_new = z.dot(&z);
        let beta = zz_new / zz;
        zz = zz_new;
        let mut p_new = z.clone();
        p_new.axpy(beta, &p);
        p = p_new;
    }
    if r.norm() <= tol * rhs_norm {
        Ok(x)
    } else {
        Err(Error::SolveFailed {
            residual: r.norm() / rhs_norm,
            tol,
        })
    }
}

/// Spectral radius of a self-adjoint map by power iteration from a seeded
/// start vector.
pub fn self_adjoint_spectral_radius(
    apply: impl Fn(&HilbertVector) -> HilbertVector,
    grid: &crate::hilbert::Grid,
    iterations: usize,
    seed: u64,
) -> f64 {
    let mut rng = seeded(seed);
    let mut v = unit_direction(&mut rng, grid);
    let mut estimate = 0.0;
    for _ in 0..iterations {
        let w = apply(&v);
        let n = w.norm();
        if n == 0.0 {
            return 0.0;
        }
        // Rayleigh-quotient magnitude is monotone for self-adjoint maps.
        estimate = f64::max(estimate, n);
        v = w.scale(1.0 / n);
    }
    estimate
}

/// `‖A‖` estimated as `sqrt(ρ(A*A))`.
pub fn operator_norm(a_map: &dyn LinearMap, iterations: usize, seed: u64) -> f64 {
    self_adjoint_spectral_radius(
        |v| a_map.adjoint_apply(&a_map.apply(v)),
        a_map.grid(),
        iterations,
        seed,
    )
    .sqrt()
}
