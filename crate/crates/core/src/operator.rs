//! Operator contracts: linear maps with adjoints and (possibly nonlinear)
//! monotone operators with optional Fréchet derivatives.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::hilbert::{Grid, HilbertVector};
use crate::linalg::operator_norm;

/// A bounded linear map on a grid, with its adjoint taken with respect to the
/// grid's weighted inner product.
pub trait LinearMap: Send + Sync {
    fn grid(&self) -> &Grid;

    fn apply(&self, x: &HilbertVector) -> HilbertVector;

    fn adjoint_apply(&self, x: &HilbertVector) -> HilbertVector;

    fn dimension(&self) -> usize {
        self.grid().len()
    }

    /// Matrix of the map acting on value coordinates.
    fn to_matrix(&self) -> DMatrix<f64> {
        let n = self.dimension();
        let grid = self.grid();
        let mut m = DMatrix::zeros(n, n);
        for j in 0..n {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            let col = self.apply(&grid.vector(e).expect("basis vector"));
            m.set_column(j, &DVector::from_column_slice(col.values()));
        }
        m
    }
}

/// Dense matrix acting on value coordinates. The adjoint in the weighted
/// inner product is `W⁻¹ Mᵀ W`.
#[derive(Clone, Debug)]
pub struct DenseMap {
    grid: Grid,
    matrix: DMatrix<f64>,
}

impl DenseMap {
    pub fn new(grid: Grid, matrix: DMatrix<f64>) -> Result<Self> {
        let n = grid.len();
        if matrix.nrows() != n || matrix.ncols() != n {
            return Err(Error::GridMismatch(format!(
                "{}x{} matrix on a grid of {} nodes",
                matrix.nrows(),
                matrix.ncols(),
                n
            )));
        }
        Ok(Self { grid, matrix })
    }

    pub fn identity(grid: &Grid) -> Self {
        Self::scaled_identity(grid, 1.0)
    }

    pub fn zero(grid: &Grid) -> Self {
        Self::scaled_identity(grid, 0.0)
    }

    pub fn scaled_identity(grid: &Grid, c: f64) -> Self {
        let n = grid.len();
        Self {
            grid: grid.clone(),
            matrix: DMatrix::identity(n, n) * c,
        }
    }

    /// `u ↦ ⟨u, p⟩ q`.
    pub fn outer(p: &HilbertVector, q: &HilbertVector) -> Result<Self> {
        p.grid().check_same(q.grid())?;
        let n = p.len();
        let w = p.grid().weights();
        let m = DMatrix::from_fn(n, n, |i, j| q.values()[i] * w[j] * p.values()[j]);
        Ok(Self {
            grid: p.grid().clone(),
            matrix: m,
        })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// `self + c·I`
    pub fn shifted(&self, c: f64) -> DenseMap {
        let n = self.grid.len();
        DenseMap {
            grid: self.grid.clone(),
            matrix: &self.matrix + DMatrix::identity(n, n) * c,
        }
    }

    pub fn add_diagonal(&mut self, diag: &[f64]) {
        for (i, d) in diag.iter().enumerate() {
            self.matrix[(i, i)] += d;
        }
    }
}

impl LinearMap for DenseMap {
    fn grid(&self) -> &Grid {
        &self.grid
    }

    fn apply(&self, x: &HilbertVector) -> HilbertVector {
        let y = &self.matrix * DVector::from_column_slice(x.values());
        x.with_values(y.as_slice().to_vec())
    }

    fn adjoint_apply(&self, x: &HilbertVector) -> HilbertVector {
        let w = self.grid.weights();
        let wx = DVector::from_iterator(x.len(), x.values().iter().zip(w).map(|(v, w)| v * w));
        let y = self.matrix.tr_mul(&wx);
        x.with_values(y.iter().zip(w).map(|(v, w)| v / w).collect())
    }

    fn to_matrix(&self) -> DMatrix<f64> {
        self.matrix.clone()
    }
}

/// Smoothness bounds `‖F′(u)‖ ≤ M1`, `‖F″(u)‖ ≤ M2` on the ball of radius
/// `radius` about `center`. Unknown entries are `None`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct OperatorBounds {
    pub m1: Option<f64>,
    pub m2: Option<f64>,
    pub radius: Option<f64>,
    pub center: Option<HilbertVector>,
}

impl OperatorBounds {
    pub fn with_m1(m1: f64) -> Self {
        Self {
            m1: Some(m1),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("M1", self.m1), ("M2", self.m2)] {
            if let Some(v) = v {
                if !(v >= 0.0 && v.is_finite()) {
                    return Err(Error::InvalidInput(format!("{name} = {v} must be >= 0")));
                }
            }
        }
        if let Some(r) = self.radius {
            if !(r > 0.0) {
                return Err(Error::InvalidInput(format!("radius {r} must be > 0")));
            }
        }
        Ok(())
    }

    pub fn require_m1(&self) -> Result<f64> {
        self.m1.ok_or(Error::MissingBound("M1"))
    }
}

/// A map `F: H → H`, assumed monotone: `⟨F(u) − F(v), u − v⟩ ≥ 0`.
pub trait NonlinearOperator: Send + Sync {
    fn grid(&self) -> &Grid;

    fn apply(&self, u: &HilbertVector) -> HilbertVector;

    /// Fréchet derivative `F′(u)`, if available.
    fn derivative(&self, _u: &HilbertVector) -> Option<Box<dyn LinearMap>> {
        None
    }

    fn bounds(&self) -> OperatorBounds {
        OperatorBounds::default()
    }
}

impl<T: NonlinearOperator + ?Sized> NonlinearOperator for &T {
    fn grid(&self) -> &Grid {
        (**self).grid()
    }
    fn apply(&self, u: &HilbertVector) -> HilbertVector {
        (**self).apply(u)
    }
    fn derivative(&self, u: &HilbertVector) -> Option<Box<dyn LinearMap>> {
        (**self).derivative(u)
    }
    fn bounds(&self) -> OperatorBounds {
        (**self).bounds()
    }
}

/// `F(u) = M u + b`.
#[derive(Clone, Debug)]
pub struct AffineOperator {
    map: DenseMap,
    offset: Option<HilbertVector>,
    m1: f64,
}

impl AffineOperator {
    pub fn linear(map: DenseMap) -> Self {
        let m1 = operator_norm(&map, 200, 0);
        Self {
            map,
            offset: None,
            m1,
        }
    }

    pub fn with_offset(map: DenseMap, offset: HilbertVector) -> Result<Self> {
        map.grid().check_same(offset.grid())?;
        let mut op = Self::linear(map);
        op.offset = Some(offset);
        Ok(op)
    }

    pub fn identity(grid: &Grid) -> Self {
        Self::linear(DenseMap::identity(grid))
    }

    pub fn zero(grid: &Grid) -> Self {
        Self::linear(DenseMap::zero(grid))
    }

    /// `u ↦ ⟨u, p⟩ p`.
    pub fn rank_one(p: &HilbertVector) -> Self {
        Self::linear(DenseMap::outer(p, p).expect("same grid"))
    }

    pub fn map(&self) -> &DenseMap {
        &self.map
    }
}

impl NonlinearOperator for AffineOperator {
    fn grid(&self) -> &Grid {
        self.map.grid()
    }

    fn apply(&self, u: &HilbertVector) -> HilbertVector {
        let mu = self.map.apply(u);
        match &self.offset {
            Some(b) => mu.add(b),
            None => mu,
        }
    }

    fn derivative(&self, _u: &HilbertVector) -> Option<Box<dyn LinearMap>> {
        Some(Box::new(self.map.clone()))
    }

    fn bounds(&self) -> OperatorBounds {
        OperatorBounds {
            m1: Some(self.m1),
            m2: Some(0.0),
            ..OperatorBounds::default()
        }
    }
}

type ApplyFn = dyn Fn(&HilbertVector) -> HilbertVector + Send + Sync;
type DerivFn = dyn Fn(&HilbertVector) -> DenseMap + Send + Sync;

/// Operator built from closures.
pub struct FnOperator {
    grid: Grid,
    apply: Box<ApplyFn>,
    derivative: Option<Box<DerivFn>>,
    bounds: OperatorBounds,
}

impl FnOperator {
    pub fn new(
        grid: Grid,
        apply: impl Fn(&HilbertVector) -> HilbertVector + Send + Sync + 'static,
    ) -> Self {
        Self {
            grid,
            apply: Box::new(apply),
            derivative: None,
            bounds: OperatorBounds::default(),
        }
    }

    pub fn with_derivative(
        mut self,
        d: impl Fn(&HilbertVector) -> DenseMap + Send + Sync + 'static,
    ) -> Self {
        self.derivative = Some(Box::new(d));
        self
    }

    pub fn with_bounds(mut self, bounds: OperatorBounds) -> Self {
        self.bounds = bounds;
        self
    }
}

impl NonlinearOperator for FnOperator {
    fn grid(&self) -> &Grid {
        &self.grid
    }

    fn apply(&self, u: &HilbertVector) -> HilbertVector {
        (self.apply)(u)
    }

    fn derivative(&self, u: &HilbertVector) -> Option<Box<dyn LinearMap>> {
        self.derivative
            .as_ref()
            .map(|d| Box::new(d(u)) as Box<dyn LinearMap>)
    }

    fn bounds(&self) -> OperatorBounds {
        self.bounds.clone()
    }
}

/// `w ↦ F(w + ū)`; monotone whenever `F` is.
pub struct Shifted<'a, F: ?Sized> {
    inner: &'a F,
    shift: HilbertVector,
}

impl<'a, F: NonlinearOperator + ?Sized> Shifted<'a, F> {
    pub fn new(inner: &'a F, shift: HilbertVector) -> Result<Self> {
        inner.grid().check_same(shift.grid())?;
        Ok(Self { inner, shift })
    }

    pub fn shift(&self) -> &HilbertVector {
        &self.shift
    }
}

impl<F: NonlinearOperator + ?Sized> NonlinearOperator for Shifted<'_, F> {
    fn grid(&self) -> &Grid {
        self.inner.grid()
    }

    fn apply(&self, w: &HilbertVector) -> HilbertVector {
        self.inner.apply(&w.add(&self.shift))
    }

    fn derivative(&self, w: &HilbertVector) -> Option<Box<dyn LinearMap>> {
        self.inner.derivative(&w.add(&self.shift))
    }

    fn bounds(&self) -> OperatorBounds {
        let mut b = self.inner.bounds();
        b.center = b.center.map(|c| c.sub(&self.shift));
        b
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{seeded, standard_normals};

    #[test]
    fn dense_adjoint_matches_weighted_inner_product() {
        let grid = Grid::trapezoid(9).unwrap();
        let mut rng = seeded(3);
        let m = DMatrix::from_vec(9, 9, standard_normals(&mut rng, 81));
        let a = DenseMap::new(grid.clone(), m).unwrap();
        for _ in 0..20 {
            let u = grid.vector(standard_normals(&mut rng, 9)).unwrap();
            let v = grid.vector(standard_normals(&mut rng, 9)).unwrap();
            let lhs = a.apply(&u).dot(&v);
            let rhs = u.dot(&a.adjoint_apply(&v));
            assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + lhs.abs()));
        }
    }

    #[test]
    fn default_to_matrix_reconstructs_dense() {
        struct Wrapper(DenseMap);
        impl LinearMap for Wrapper {
            fn grid(&self) -> &Grid {
                self.0.grid()
            }
            fn apply(&self, x: &HilbertVector) -> HilbertVector {
                self.0.apply(x)
            }
            fn adjoint_apply(&self, x: &HilbertVector) -> HilbertVector {
                self.0.adjoint_apply(x)
            }
        }
        let grid = Grid::euclidean(4).unwrap();
        let m = DMatrix::from_fn(4, 4, |i, j| (i * 4 + j) as f64);
        let w = Wrapper(DenseMap::new(grid, m.clone()).unwrap());
        assert_eq!(w.to_matrix(), m);
    }

    #[test]
    fn rank_one_projects() {
        let grid = Grid::euclidean(2).unwrap();
        let p = grid.vector(vec![1.0, 0.0]).unwrap();
        let f = AffineOperator::rank_one(&p);
        let u = grid.vector(vec![3.0, 5.0]).unwrap();
        assert_eq!(f.apply(&u).values(), &[3.0, 0.0]);
        assert!((f.bounds().m1.unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn shifted_operator_evaluates_at_offset() {
        let grid = Grid::euclidean(3).unwrap();
        let f = AffineOperator::identity(&grid);
        let s = Shifted::new(&f, grid.constant(2.0)).unwrap();
        assert_eq!(s.apply(&grid.constant(1.0)).values(), &[3.0; 3]);
    }

    #[test]
    fn bounds_validation() {
        assert!(OperatorBounds::with_m1(-1.0).validate().is_err());
        assert!(OperatorBounds::with_m1(2.0).validate().is_ok());
        assert_eq!(
            OperatorBounds::default().require_m1(),
            Err(Error::MissingBound("M1"))
        );
    }
}
