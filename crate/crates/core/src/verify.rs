//! Numerical checks of operator contracts: sampled monotonicity, derivative
//! against central differences, and adjoint consistency.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::HilbertVector;
use crate::operator::{LinearMap, NonlinearOperator};
use crate::rng::{point_in_ball, seeded, unit_direction, SeededRng};

/// Relative-error denominators are floored at this value.
pub const EPS_FLOOR: f64 = 1e-14;

/// Seeded generator of point pairs drawn uniformly from a ball.
#[derive(Clone, Debug)]
pub struct BallSampler {
    center: HilbertVector,
    radius: f64,
    rng: SeededRng,
}

impl BallSampler {
    pub fn new(center: HilbertVector, radius: f64, seed: u64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidInput(format!("sampling radius {radius} must be > 0")));
        }
        Ok(Self {
            center,
            radius,
            rng: seeded(seed),
        })
    }

    pub fn next_point(&mut self) -> HilbertVector {
        point_in_ball(&mut self.rng, &self.center, self.radius)
    }

    pub fn next_pair(&mut self) -> (HilbertVector, HilbertVector) {
        let u = self.next_point();
        let v = self.next_point();
        (u, v)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityReport {
    pub pairs: usize,
    /// `min ⟨F(u) − F(v), u − v⟩` over the sampled pairs.
    pub min_value: f64,
    pub worst_pair: usize,
    pub tol: f64,
    pub passed: bool,
}

pub fn check_monotonicity<F: NonlinearOperator + ?Sized>(
    op: &F,
    sampler: &mut BallSampler,
    n_pairs: usize,
    tol: f64,
) -> Result<MonotonicityReport> {
    if n_pairs == 0 {
        return Err(Error::InvalidInput("n_pairs must be >= 1".into()));
    }
    op.grid().check_same(sampler.center.grid())?;
    let mut min_value = f64::INFINITY;
    let mut worst_pair = 0;
    for i in 0..n_pairs {
        let (u, v) = sampler.next_pair();
        let value = op.apply(&u).sub(&op.apply(&v)).dot(&u.sub(&v));
        if value < min_value {
            min_value = value;
            worst_pair = i;
        }
    }
    Ok(MonotonicityReport {
        pairs: n_pairs,
        min_value,
        worst_pair,
        tol,
        passed: min_value >= -tol,
    })
}

/// Max over seeded unit directions `w` of
/// `‖F′(u)w − (F(u+hw) − F(u−hw))/(2h)‖ / max(‖F′(u)w‖, ε)`.
pub fn fd_derivative_check<F: NonlinearOperator + ?Sized>(
    op: &F,
    u: &HilbertVector,
    n_directions: usize,
    h: f64,
    seed: u64,
) -> Result<f64> {
    if !(h > 0.0) {
        return Err(Error::InvalidInput(format!("difference step {h} must be > 0")));
    }
    op.grid().check_same(u.grid())?;
    let deriv = op.derivative(u).ok_or(Error::NoDerivative)?;
    let mut rng = seeded(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..n_directions {
        let w = unit_direction(&mut rng, u.grid());
        let jw = deriv.apply(&w);
        let mut up = u.clone();
        up.axpy(h, &w);
        let mut um = u.clone();
        um.axpy(-h, &w);
        let fd = op.apply(&up).sub(&op.apply(&um)).scale(0.5 / h);
        let err = jw.distance(&fd) / jw.norm().max(EPS_FLOOR);
        worst = worst.max(err);
    }
    Ok(worst)
}

/// Max relative defect of `⟨Au, v⟩ = ⟨u, A*v⟩` over seeded pairs.
pub fn adjoint_defect(map: &dyn LinearMap, n_pairs: usize, seed: u64) -> f64 {
    let mut rng = seeded(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..n_pairs {
        let u = unit_direction(&mut rng, map.grid());
        let v = unit_direction(&mut rng, map.grid());
        let au = map.apply(&u);
        let lhs = au.dot(&v);
        let rhs = u.dot(&map.adjoint_apply(&v));
        let scale = au.norm().max(EPS_FLOOR);
        worst = worst.max((lhs - rhs).abs() / scale);
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::Grid;
    use crate::operator::{AffineOperator, DenseMap, FnOperator};

    #[test]
    fn identity_is_monotone() {
        let g = Grid::trapezoid(10).unwrap();
        let f = AffineOperator::identity(&g);
        let mut s = BallSampler::new(g.zeros(), 2.0, 1).unwrap();
        let r = check_monotonicity(&f, &mut s, 100, 0.0).unwrap();
        assert!(r.passed);
        assert!(r.min_value >= 0.0);
    }

    #[test]
    fn negation_fails_monotonicity() {
        let g = Grid::trapezoid(10).unwrap();
        let f = AffineOperator::linear(DenseMap::scaled_identity(&g, -1.0));
        let mut s = BallSampler::new(g.zeros(), 2.0, 1).unwrap();
        let r = check_monotonicity(&f, &mut s, 1, 1e-12).unwrap();
        // Replay the same pair to get the exact expected value.
        let mut replay = BallSampler::new(g.zeros(), 2.0, 1).unwrap();
        let (u, v) = replay.next_pair();
        let d = u.distance(&v);
        assert!(!r.passed);
        assert!((r.min_value + d * d).abs() <= 1e-12 * d * d);
    }

    #[test]
    fn zero_pairs_rejected() {
        let g = Grid::euclidean(2).unwrap();
        let mut s = BallSampler::new(g.zeros(), 1.0, 0).unwrap();
        assert!(check_monotonicity(&AffineOperator::identity(&g), &mut s, 0, 0.0).is_err());
    }

    #[test]
    fn linear_operator_derivative_is_exact() {
        let g = Grid::trapezoid(8).unwrap();
        let f = AffineOperator::identity(&g);
        // At u = 0 the difference quotient is free of cancellation.
        for h in [1e-8, 1e-3, 1.0] {
            let e = fd_derivative_check(&f, &g.zeros(), 5, h, 2).unwrap();
            assert!(e <= 1e-12, "h={h}: {e}");
        }
    }

    #[test]
    fn constant_operator_has_zero_derivative() {
        let g = Grid::euclidean(3).unwrap();
        let c = g.constant(7.0);
        let f = FnOperator::new(g.clone(), move |_| c.clone())
            .with_derivative(|u| DenseMap::zero(u.grid()));
        let e = fd_derivative_check(&f, &g.constant(1.0), 5, 1e-4, 0).unwrap();
        assert!(e <= 1e-12);
    }

    #[test]
    fn missing_derivative_reported() {
        let g = Grid::euclidean(3).unwrap();
        let f = FnOperator::new(g.clone(), |u| u.clone());
        assert_eq!(
            fd_derivative_check(&f, &g.zeros(), 1, 1e-6, 0),
            Err(Error::NoDerivative)
        );
    }
}
