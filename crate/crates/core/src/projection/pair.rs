use nalgebra::{DMatrix, DVector, Dyn, LU};

use crate::error::{Error, Result};
use crate::linalg::MatrixHandle;

/// Condition number of `WᵀAV` above which a projection is rejected.
pub const MAX_CORE_COND: f64 = 1e14;

/// Search basis `V`, constraint basis `W` and the LU-factored core `WᵀAV`.
///
/// `AᵀW` is kept alongside so the oblique projector can be applied without `A`.
#[derive(Debug, Clone)]
pub struct ProjectionPair {
    v: DMatrix<f64>,
    w: DMatrix<f64>,
    atw: DMatrix<f64>,
    core: DMatrix<f64>,
    lu: LU<f64, Dyn, Dyn>,
    lu_t: LU<f64, Dyn, Dyn>,
    cond: f64,
}

impl ProjectionPair {
    pub fn new(a: &MatrixHandle, v: DMatrix<f64>, w: DMatrix<f64>) -> Result<Self> {
        let n = a.nrows();
        if !a.is_square() {
            return Err(Error::InvalidMatrix("projection needs a square matrix".into()));
        }
        if v.nrows() != n {
            return Err(Error::DimensionMismatch { expected: n, found: v.nrows() });
        }
        if w.nrows() != n {
            return Err(Error::DimensionMismatch { expected: n, found: w.nrows() });
        }
        if v.ncols() != w.ncols() {
            return Err(Error::DimensionMismatch { expected: v.ncols(), found: w.ncols() });
        }
        if v.ncols() > n {
            return Err(Error::InvalidParameter(format!("m = {} exceeds n = {n}", v.ncols())));
        }
        let atw = a.apply_transpose_block(&w)?;
        let core = atw.tr_mul(&v);
        let cond = if core.is_empty() {
            1.0
        } else {
            let s = core.clone().svd(false, false).singular_values;
            let (smin, smax) = (s.min(), s.max());
            if smin > 0.0 {
                smax / smin
            } else {
                f64::INFINITY
            }
        };
        if !(cond <= MAX_CORE_COND) {
            return Err(Error::IllPosedProjection { cond });
        }
        let lu = core.clone().lu();
        let lu_t = core.transpose().lu();
        Ok(Self { v, w, atw, core, lu, lu_t, cond })
    }

    /// Full-space projection `V = W = I`; the solve is exact.
    pub fn full(a: &MatrixHandle) -> Result<Self> {
        let n = a.nrows();
        Self::new(a, DMatrix::identity(n, n), DMatrix::identity(n, n))
    }

    pub fn n(&self) -> usize {
        self.v.nrows()
    }

    pub fn m(&self) -> usize {
        self.v.ncols()
    }

    pub fn v(&self) -> &DMatrix<f64> {
        &self.v
    }

    pub fn w(&self) -> &DMatrix<f64> {
        &self.w
    }

    /// `AᵀW`.
    pub fn atw(&self) -> &DMatrix<f64> {
        &self.atw
    }

    /// `WᵀAV`.
    pub fn core(&self) -> &DMatrix<f64> {
        &self.core
    }

    pub fn core_cond(&self) -> f64 {
        self.cond
    }

    /// `(WᵀAV)⁻¹ rhs`.
    pub fn core_solve(&self, rhs: &DVector<f64>) -> DVector<f64> {
        if self.m() == 0 {
            return DVector::zeros(0);
        }
        self.lu.solve(rhs).expect("core factorization checked at construction")
    }

    /// `(WᵀAV)⁻ᵀ rhs`.
    pub fn core_solve_transpose(&self, rhs: &DVector<f64>) -> DVector<f64> {
        if self.m() == 0 {
            return DVector::zeros(0);
        }
        self.lu_t.solve(rhs).expect("core factorization checked at construction")
    }

    /// Coordinates `δ = (WᵀAV)⁻¹ Wᵀ (b − A x₀)` of the correction in the `V` basis.
    pub fn coefficients(&self, a: &MatrixHandle, b: &DVector<f64>, x0: &DVector<f64>) -> Result<DVector<f64>> {
        if b.len() != self.n() {
            return Err(Error::DimensionMismatch { expected: self.n(), found: b.len() });
        }
        let r = b - a.apply(x0)?;
        Ok(self.core_solve(&self.w.tr_mul(&r)))
    }
}

/// `x̃ = x₀ + V (WᵀAV)⁻¹ Wᵀ (b − A x₀)`.
pub fn petrov_galerkin_solve(
    a: &MatrixHandle,
    b: &DVector<f64>,
    x0: &DVector<f64>,
    pair: &ProjectionPair,
) -> Result<DVector<f64>> {
    let delta = pair.coefficients(a, b, x0)?;
    if pair.m() == 0 {
        return Ok(x0.clone());
    }
    Ok(x0 + pair.v() * delta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{random_spd, SpdEnsembleSpec};
    use crate::rng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn full_space_projection_is_exact() {
        let spec = SpdEnsembleSpec { n: 6, scale: 10.0, seed: 1 };
        let mut r = rng::stream(1, &[]);
        let a = random_spd(&spec, &mut r).unwrap();
        let b = DVector::from_fn(6, |_, _| StandardNormal.sample(&mut r));
        let pair = ProjectionPair::full(&a).unwrap();
        let x = petrov_galerkin_solve(&a, &b, &DVector::zeros(6), &pair).unwrap();
        let exact = a.to_dense().lu().solve(&b).unwrap();
        assert!((x - &exact).norm() <= 1e-10 * exact.norm());
    }

    #[test]
    fn one_dimensional_identity() {
        let a = MatrixHandle::identity(3);
        let e1 = DMatrix::from_column_slice(3, 1, &[1.0, 0.0, 0.0]);
        let pair = ProjectionPair::new(&a, e1.clone(), e1).unwrap();
        let b = DVector::from_vec(vec![2.0, 0.0, 0.0]);
        let x = petrov_galerkin_solve(&a, &b, &DVector::zeros(3), &pair).unwrap();
        assert_eq!(x, b);
    }

    #[test]
    fn singular_core_is_ill_posed() {
        let a = MatrixHandle::identity(3);
        let v = DMatrix::from_column_slice(3, 1, &[1.0, 0.0, 0.0]);
        let w = DMatrix::from_column_slice(3, 1, &[0.0, 1.0, 0.0]);
        assert!(matches!(ProjectionPair::new(&a, v, w), Err(Error::IllPosedProjection { .. })));
    }

    #[test]
    fn empty_projection_returns_initial_guess() {
        let a = MatrixHandle::identity(2);
        let pair = ProjectionPair::new(&a, DMatrix::zeros(2, 0), DMatrix::zeros(2, 0)).unwrap();
        let x0 = DVector::from_vec(vec![1.0, 2.0]);
        let x = petrov_galerkin_solve(&a, &DVector::zeros(2), &x0, &pair).unwrap();
        assert_eq!(x, x0);
    }
}
