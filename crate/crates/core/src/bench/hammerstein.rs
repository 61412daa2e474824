//! `F(u)(x) = ∫₀¹ e^{−|x−y|} u(y) dy + arctan(u(x))³` on `[0, 1]`, with the
//! integral discretized by the trapezoid rule on uniform nodes.

use nalgebra::DMatrix;

use crate::bench::{NoisyProblem, NormConvention};
use crate::bench::noise::{gen_noise, NoiseSpec};
use crate::error::{Error, Result};
use crate::hilbert::{Grid, HilbertVector};
use crate::linalg::operator_norm;
use crate::operator::{DenseMap, LinearMap, NonlinearOperator, OperatorBounds};

#[derive(Clone, Debug)]
pub struct HammersteinProblem {
    nodes: Vec<f64>,
    quadrature: Vec<f64>,
    grid: Grid,
    kernel: DenseMap,
    norm: NormConvention,
    m1: f64,
}

/// `3 arctan(u)² / (1 + u²)`
pub fn diagonal_term(u: f64) -> f64 {
    let t = u.atan();
    3.0 * t * t / (1.0 + u * u)
}

/// `sup_u 3 arctan(u)²/(1 + u²)`, by ternary search on the unimodal branch
/// `u > 0`.
pub fn diagonal_sup() -> f64 {
    let (mut lo, mut hi) = (0.1f64, 10.0f64);
    for _ in 0..200 {
        let m1 = lo + (hi - lo) / 3.0;
        let m2 = hi - (hi - lo) / 3.0;
        if diagonal_term(m1) < diagonal_term(m2) {
            lo = m1;
        } else {
            hi = m2;
        }
    }
    diagonal_term(0.5 * (lo + hi))
}

impl HammersteinProblem {
    pub fn new(n_nodes: usize, norm: NormConvention) -> Result<Self> {
        if n_nodes < 2 {
            return Err(Error::InvalidInput(format!("need at least 2 nodes, got {n_nodes}")));
        }
        let nodes = Grid::uniform_nodes(n_nodes);
        let trapezoid = Grid::trapezoid(n_nodes)?;
        let quadrature = trapezoid.weights().to_vec();
        let grid = match norm {
            NormConvention::WeightedL2 => trapezoid,
            NormConvention::Euclidean => Grid::euclidean(n_nodes)?,
        };
        let k = DMatrix::from_fn(n_nodes, n_nodes, |i, j| {
            (-(nodes[i] - nodes[j]).abs()).exp() * quadrature[j]
        });
        let kernel = DenseMap::new(grid.clone(), k)?;
        let m1 = diagonal_sup() + operator_norm(&kernel, 500, 0);
        Ok(Self {
            nodes,
            quadrature,
            grid,
            kernel,
            norm,
            m1,
        })
    }

    /// Weighted-norm problem on `n_nodes` nodes.
    pub fn weighted(n_nodes: usize) -> Result<Self> {
        Self::new(n_nodes, NormConvention::WeightedL2)
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn quadrature_weights(&self) -> &[f64] {
        &self.quadrature
    }

    pub fn norm_convention(&self) -> NormConvention {
        self.norm
    }

    /// The integral part as a matrix, `K_ij = e^{−|x_i − x_j|} w_j`.
    pub fn kernel(&self) -> &DenseMap {
        &self.kernel
    }

    /// `u ≡ 1`
    pub fn exact_solution(&self) -> HilbertVector {
        self.grid.constant(1.0)
    }

    /// `f = F(1)`
    pub fn exact_rhs(&self) -> HilbertVector {
        self.apply(&self.exact_solution())
    }

    /// `F`, `f = F(1)`, and `f_δ` drawn with `spec`.
    pub fn noisy(self, spec: &NoiseSpec) -> Result<NoisyProblem<HammersteinProblem>> {
        let f = self.exact_rhs();
        let draw = gen_noise(&f, spec)?;
        let y = self.exact_solution();
        Ok(NoisyProblem {
            op: self,
            f_exact: f,
            f_delta: draw.f_delta,
            delta: draw.delta,
            exact_solution: Some(y),
        })
    }
}

pub fn hammerstein_apply(prob: &HammersteinProblem, u: &HilbertVector) -> Result<HilbertVector> {
    prob.grid.check_same(u.grid())?;
    let mut out = prob.kernel.apply(u);
    let cubic = u.map(|x| x.atan().powi(3));
    out.axpy(1.0, &cubic);
    Ok(out)
}

/// `w ↦ D(u) w + K w` with `D(u)_i = 3 arctan(u_i)²/(1 + u_i²)`.
pub fn hammerstein_derivative(prob: &HammersteinProblem, u: &HilbertVector) -> Result<DenseMap> {
    prob.grid.check_same(u.grid())?;
    let mut d = prob.kernel.clone();
    let diag: Vec<f64> = u.values().iter().map(|&x| diagonal_term(x)).collect();
    d.add_diagonal(&diag);
    Ok(d)
}

impl NonlinearOperator for HammersteinProblem {
    fn grid(&self) -> &Grid {
        &self.grid
    }

    fn apply(&self, u: &HilbertVector) -> HilbertVector {
        hammerstein_apply(self, u).expect("vector on the problem grid")
    }

    fn derivative(&self, u: &HilbertVector) -> Option<Box<dyn LinearMap>> {
        Some(Box::new(
            hammerstein_derivative(self, u).expect("vector on the problem grid"),
        ))
    }

    fn bounds(&self) -> OperatorBounds {
        OperatorBounds::with_m1(self.m1)
    }
}
