//! Weighted discrete Hilbert space.
//!
//! Elements of `L²(0,1)` (or plain `Rⁿ`) are represented by their samples on a
//! grid together with positive quadrature weights; the inner product is
//! `⟨u, v⟩ = Σ wᵢ uᵢ vᵢ`. With unit weights this is the Euclidean space.

use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Quadrature weights shared by every vector living on the same grid.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(into = "Vec<f64>", try_from = "Vec<f64>")]
pub struct Grid {
    weights: Arc<[f64]>,
}

impl Grid {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidInput("grid needs at least one node".into()));
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
            return Err(Error::InvalidInput(format!("grid weight {w} is not positive")));
        }
        Ok(Self {
            weights: weights.into(),
        })
    }

    /// Unit weights: the Euclidean inner product on `Rⁿ`.
    pub fn euclidean(n: usize) -> Result<Self> {
        Self::new(vec![1.0; n])
    }

    /// Composite trapezoid weights for `n ≥ 2` uniform nodes on `[0, 1]`.
    pub fn trapezoid(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidInput(format!(
                "trapezoid rule needs at least 2 nodes, got {n}"
            )));
        }
        let h = 1.0 / (n - 1) as f64;
        let mut w = vec![h; n];
        w[0] = h / 2.0;
        w[n - 1] = h / 2.0;
        Self::new(w)
    }

    /// Uniform nodes `xᵢ = i/(n−1)` matching [`Grid::trapezoid`].
    pub fn uniform_nodes(n: usize) -> Vec<f64> {
        if n == 1 {
            return vec![0.0];
        }
        (0..n).map(|i| i as f64 / (n - 1) as f64).collect()
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Total mass of the weights (the measure of the domain).
    pub fn measure(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn zeros(&self) -> HilbertVector {
        self.constant(0.0)
    }

    pub fn constant(&self, c: f64) -> HilbertVector {
        HilbertVector {
            values: vec![c; self.len()],
            grid: self.clone(),
        }
    }

    pub fn vector(&self, values: Vec<f64>) -> Result<HilbertVector> {
        HilbertVector::new(self.clone(), values)
    }

    pub fn check_same(&self, other: &Grid) -> Result<()> {
        if self == other {
            Ok(())
        } else if self.len() != other.len() {
            Err(Error::GridMismatch(format!(
                "lengths {} and {}",
                self.len(),
                other.len()
            )))
        } else {
            Err(Error::GridMismatch("weights differ".into()))
        }
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.weights, &other.weights) || self.weights == other.weights
    }
}

impl From<Grid> for Vec<f64> {
    fn from(g: Grid) -> Self {
        g.weights.to_vec()
    }
}

impl TryFrom<Vec<f64>> for Grid {
    type Error = Error;

    fn try_from(w: Vec<f64>) -> Result<Self> {
        Grid::new(w)
    }
}

/// A sampled element of the Hilbert space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HilbertVector {
    values: Vec<f64>,
    grid: Grid,
}

impl HilbertVector {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} values on a grid of {} nodes",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self { values, grid })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Weighted inner product. Panics if the grids differ; use
    /// [`weighted_inner_product`] for a checked version.
    pub fn dot(&self, other: &HilbertVector) -> f64 {
        assert_eq!(self.len(), other.len(), "inner product of mismatched vectors");
        self.grid
            .weights()
            .iter()
            .zip(self.values.iter().zip(&other.values))
            .map(|(w, (a, b))| w * a * b)
            .sum()
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).max(0.0).sqrt()
    }

    pub fn distance(&self, other: &HilbertVector) -> f64 {
        self.sub(other).norm()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> HilbertVector {
        HilbertVector {
            values: self.values.iter().map(|&x| f(x)).collect(),
            grid: self.grid.clone(),
        }
    }

    pub fn zip_map(&self, other: &HilbertVector, f: impl Fn(f64, f64) -> f64) -> HilbertVector {
        assert_eq!(self.len(), other.len(), "elementwise op on mismatched vectors");
        HilbertVector {
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
            grid: self.grid.clone(),
        }
    }

    pub fn add(&self, other: &HilbertVector) -> HilbertVector {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &HilbertVector) -> HilbertVector {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn scale(&self, c: f64) -> HilbertVector {
        self.map(|x| c * x)
    }

    /// `self += alpha * x`
    pub fn axpy(&mut self, alpha: f64, x: &HilbertVector) {
        assert_eq!(self.len(), x.len(), "axpy on mismatched vectors");
        for (s, xi) in self.values.iter_mut().zip(&x.values) {
            *s += alpha * xi;
        }
    }

    /// Same grid, new values.
    pub fn with_values(&self, values: Vec<f64>) -> HilbertVector {
        assert_eq!(values.len(), self.len());
        HilbertVector {
            values,
            grid: self.grid.clone(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

impl Add for &HilbertVector {
    type Output = HilbertVector;
    fn add(self, rhs: &HilbertVector) -> HilbertVector {
        HilbertVector::add(self, rhs)
    }
}

impl Sub for &HilbertVector {
    type Output = HilbertVector;
    fn sub(self, rhs: &HilbertVector) -> HilbertVector {
        HilbertVector::sub(self, rhs)
    }
}

impl Mul<&HilbertVector> for f64 {
    type Output = HilbertVector;
    fn mul(self, rhs: &HilbertVector) -> HilbertVector {
        rhs.scale(self)
    }
}

impl Neg for &HilbertVector {
    type Output = HilbertVector;
    fn neg(self) -> HilbertVector {
        self.scale(-1.0)
    }
}

/// `Σ wᵢ uᵢ vᵢ`, failing with [`Error::GridMismatch`] if `u` and `v` do not
/// share a grid.
pub fn weighted_inner_product(u: &HilbertVector, v: &HilbertVector) -> Result<f64> {
    u.grid().check_same(v.grid())?;
    Ok(u.dot(v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn constant_function_integrates_to_one() {
        let g = Grid::new(vec![0.5, 0.5]).unwrap();
        let u = g.constant(1.0);
        assert_eq!(weighted_inner_product(&u, &u).unwrap(), 1.0);
    }

    #[test]
    fn zero_vector_has_zero_product() {
        let g = Grid::trapezoid(7).unwrap();
        let u = g.vector((0..7).map(|i| i as f64).collect()).unwrap();
        assert_eq!(weighted_inner_product(&u, &g.zeros()).unwrap(), 0.0);
    }

    #[test]
    fn trapezoid_integrates_x_squared() {
        let g = Grid::trapezoid(51).unwrap();
        let u = g.vector(Grid::uniform_nodes(51)).unwrap();
        let ip = weighted_inner_product(&u, &u).unwrap();
        assert_abs_diff_eq!(ip, 1.0 / 3.0, epsilon = 1e-3);
        assert_abs_diff_eq!(g.measure(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn mismatched_grids_are_rejected() {
        let a = Grid::trapezoid(5).unwrap().constant(1.0);
        let b = Grid::trapezoid(6).unwrap().constant(1.0);
        let c = Grid::euclidean(5).unwrap().constant(1.0);
        assert!(matches!(
            weighted_inner_product(&a, &b),
            Err(Error::GridMismatch(_))
        ));
        assert!(matches!(
            weighted_inner_product(&a, &c),
            Err(Error::GridMismatch(_))
        ));
    }

    #[test]
    fn rejects_nonpositive_weights() {
        assert!(Grid::new(vec![1.0, 0.0]).is_err());
        assert!(Grid::new(vec![]).is_err());
        assert!(Grid::trapezoid(1).is_err());
    }

    #[test]
    fn norm_is_zero_only_for_zero() {
        let g = Grid::trapezoid(4).unwrap();
        assert_eq!(g.zeros().norm(), 0.0);
        let e = g.vector(vec![0.0, 0.0, 1e-200, 0.0]).unwrap();
        assert!(e.norm() >= 0.0);
        assert!(g.vector(vec![0.0, 1.0, 0.0, 0.0]).unwrap().norm() > 0.0);
    }

    fn triple() -> impl Strategy<Value = (Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>)> {
        (1usize..12).prop_flat_map(|n| {
            (
                prop::collection::vec(0.01f64..2.0, n),
                prop::collection::vec(-10.0f64..10.0, n),
                prop::collection::vec(-10.0f64..10.0, n),
                prop::collection::vec(-10.0f64..10.0, n),
            )
        })
    }

    proptest! {
        #[test]
        fn inner_product_is_symmetric_and_bilinear(
            (w, u, v, z) in triple(),
            s in -5.0f64..5.0,
        ) {
            let g = Grid::new(w).unwrap();
            let u = g.vector(u).unwrap();
            let v = g.vector(v).unwrap();
            let z = g.vector(z).unwrap();
            let scale = 1.0 + u.norm() * (v.norm() + z.norm());
            prop_assert!((u.dot(&v) - v.dot(&u)).abs() <= 1e-12 * scale);
            let lhs = u.add(&v.scale(s)).dot(&z);
            let rhs = u.dot(&z) + s * v.dot(&z);
            prop_assert!((lhs - rhs).abs() <= 1e-12 * scale * (1.0 + s.abs()));
        }

        #[test]
        fn cauchy_schwarz((w, u, v, _z) in triple()) {
            let g = Grid::new(w).unwrap();
            let u = g.vector(u).unwrap();
            let v = g.vector(v).unwrap();
            prop_assert!(u.dot(&v).abs() <= u.norm() * v.norm() * (1.0 + 1e-14) + 1e-12);
        }
    }
}
