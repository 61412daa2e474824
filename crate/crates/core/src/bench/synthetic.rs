//! Small seeded test problems with known structure.

use nalgebra::DMatrix;

use crate::error::Result;
use crate::hilbert::{Grid, HilbertVector};
use crate::linalg::operator_norm;
use crate::operator::{AffineOperator, DenseMap, LinearMap, NonlinearOperator, OperatorBounds};
use crate::rng::{seeded, standard_normals};

/// `F(u) = M u + c tanh(u)` with `M = GᵀG/n + (S − Sᵀ)/2` on a Euclidean
/// grid; monotone because the symmetric part of `M` is positive
/// semidefinite and `tanh` is increasing.
#[derive(Clone, Debug)]
pub struct SyntheticMonotone {
    map: DenseMap,
    c: f64,
    m1: f64,
}

impl SyntheticMonotone {
    pub fn new(n: usize, c: f64, seed: u64) -> Result<Self> {
        let grid = Grid::euclidean(n)?;
        let mut rng = seeded(seed);
        let g = DMatrix::from_vec(n, n, standard_normals(&mut rng, n * n));
        let s = DMatrix::from_vec(n, n, standard_normals(&mut rng, n * n));
        let m = g.transpose() * &g / n as f64 + (&s - s.transpose()) * 0.5;
        let map = DenseMap::new(grid, m)?;
        let m1 = operator_norm(&map, 500, 0) + c.abs();
        Ok(Self { map, c, m1 })
    }
}

impl NonlinearOperator for SyntheticMonotone {
    fn grid(&self) -> &Grid {
        self.map.grid()
    }

    fn apply(&self, u: &HilbertVector) -> HilbertVector {
        let mut out = self.map.apply(u);
        out.axpy(self.c, &u.map(f64::tanh));
        out
    }

    fn derivative(&self, u: &HilbertVector) -> Option<Box<dyn LinearMap>> {
        let mut d = self.map.clone();
        let diag: Vec<f64> = u
            .values()
            .iter()
            .map(|&x| self.c / x.cosh().powi(2))
            .collect();
        d.add_diagonal(&diag);
        Some(Box::new(d))
    }

    fn bounds(&self) -> OperatorBounds {
        OperatorBounds::with_m1(self.m1)
    }
}

/// `F u = ⟨u, p⟩ p` on `R²` with orthonormal `p`, `q`, and data
/// `f_δ = p + δ q`. The equation `F u = p` has minimal-norm solution `p`.
pub struct RankOneProblem {
    pub op: AffineOperator,
    pub p: HilbertVector,
    pub q: HilbertVector,
}

impl RankOneProblem {
    pub fn new() -> Self {
        let g = Grid::euclidean(2).expect("two nodes");
        let p = g.vector(vec![1.0, 0.0]).expect("length 2");
        let q = g.vector(vec![0.0, 1.0]).expect("length 2");
        Self {
            op: AffineOperator::rank_one(&p),
            p,
            q,
        }
    }

    pub fn data(&self, delta: f64) -> HilbertVector {
        self.p.add(&self.q.scale(delta))
    }

    /// `a(δ) = cδ/(1 − cδ)` with `c = sqrt(C² − 1)`, for `γ = 1`.
    pub fn analytic_a(c_const: f64, delta: f64) -> f64 {
        let c = (c_const * c_const - 1.0).sqrt();
        c * delta / (1.0 - c * delta)
    }

    /// `V_{δ,a} = p/(1 + a) + (δ/a) q`
    pub fn regularized_solution(&self, delta: f64, a: f64) -> HilbertVector {
        self.p.scale(1.0 / (1.0 + a)).add(&self.q.scale(delta / a))
    }
}

impl Default for RankOneProblem {
    fn default() -> Self {
        Self::new()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::verify::{check_monotonicity, fd_derivative_check, BallSampler};

    #[test]
    fn synthetic_is_monotone() {
        for seed in 0..5 {
            let f = SyntheticMonotone::new(8, 0.5, seed).unwrap();
            let mut s = BallSampler::new(f.grid().zeros(), 3.0, seed).unwrap();
            let r = check_monotonicity(&f, &mut s, 200, 1e-12).unwrap();
            assert!(r.passed, "{r:?}");
        }
    }

    #[test]
    fn synthetic_derivative() {
        let f = SyntheticMonotone::new(6, 0.7, 3).unwrap();
        let u = f.grid().constant(0.4);
        assert!(fd_derivative_check(&f, &u, 10, 1e-5, 1).unwrap() <= 1e-8);
    }

    #[test]
    fn rank_one_solution_solves_regularized_equation() {
        let r = RankOneProblem::new();
        let (delta, a) = (0.1, 0.3);
        let v = r.regularized_solution(delta, a);
        let g = r.op.apply(&v).add(&v.scale(a)).sub(&r.data(delta));
        assert!(g.norm() <= 1e-15);
    }
}
