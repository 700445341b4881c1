use nalgebra::{DMatrix, DVector};

use super::pair::ProjectionPair;
use crate::error::{Error, Result};
use crate::linalg::{orthonormalize, MatrixHandle, OrthonormalBasis};

/// Largest dimension for which [`FactoredProjector::to_dense`] is allowed.
pub const DENSIFY_LIMIT: usize = 64;

/// Projector onto `Null(WᵀA)` applied from its factors.
///
/// - `Oblique` is `P₁ = I − V (WᵀAV)⁻¹ WᵀA`, stored as `(V, AᵀW, LU(WᵀAV))`.
/// - `Orthogonal` is `P₂ = I − Ỹ Ỹᵀ` with `Ỹ` an orthonormal basis of `range(AᵀW)`.
#[derive(Debug, Clone)]
pub enum FactoredProjector {
    Oblique(ProjectionPair),
    Orthogonal(OrthonormalBasis),
}

impl FactoredProjector {
    pub fn dim(&self) -> usize {
        match self {
            FactoredProjector::Oblique(p) => p.n(),
            FactoredProjector::Orthogonal(y) => y.dim(),
        }
    }

    /// `n − m`.
    pub fn rank(&self) -> usize {
        match self {
            FactoredProjector::Oblique(p) => p.n() - p.m(),
            FactoredProjector::Orthogonal(y) => y.dim() - y.rank(),
        }
    }

    pub fn apply(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: x.len() });
        }
        Ok(match self {
            FactoredProjector::Oblique(p) => {
                if p.m() == 0 {
                    return Ok(x.clone());
                }
                x - p.v() * p.core_solve(&p.atw().tr_mul(x))
            }
            FactoredProjector::Orthogonal(y) => x - y.project(x),
        })
    }

    pub fn apply_transpose(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: x.len() });
        }
        Ok(match self {
            FactoredProjector::Oblique(p) => {
                if p.m() == 0 {
                    return Ok(x.clone());
                }
                x - p.atw() * p.core_solve_transpose(&p.v().tr_mul(x))
            }
            FactoredProjector::Orthogonal(_) => self.apply(x)?,
        })
    }

    /// Dense matrix of the action; test-oracle helper limited to `n ≤ 64`.
    pub fn to_dense(&self) -> Result<DMatrix<f64>> {
        let n = self.dim();
        if n > DENSIFY_LIMIT {
            return Err(Error::InvalidParameter(format!(
                "refusing to densify a {n}x{n} projector (limit {DENSIFY_LIMIT})"
            )));
        }
        let mut out = DMatrix::zeros(n, n);
        for j in 0..n {
            let mut e = DVector::zeros(n);
            e[j] = 1.0;
            out.set_column(j, &self.apply(&e)?);
        }
        Ok(out)
    }
}

/// Oblique projector `P₁` of a projection pair.
pub fn make_p1(pair: &ProjectionPair) -> FactoredProjector {
    FactoredProjector::Oblique(pair.clone())
}

/// Orthogonal projector `P₂` onto `Null(WᵀA)`, built from `Ỹ = orth(AᵀW)`.
pub fn make_p2(a: &MatrixHandle, w: &DMatrix<f64>) -> Result<FactoredProjector> {
    let atw = a.apply_transpose_block(w)?;
    Ok(FactoredProjector::Orthogonal(orthonormalize(&atw)?))
}

/// `P₂` reusing the `AᵀW` already stored in a pair.
pub fn make_p2_from_pair(pair: &ProjectionPair) -> Result<FactoredProjector> {
    Ok(FactoredProjector::Orthogonal(orthonormalize(pair.atw())?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{nullspace_basis, numerical_rank, RANK_TOL};
    use crate::rng;
    use rand_distr::{Distribution, StandardNormal};

    fn gaussian(n: usize, k: usize, seed: u64) -> DMatrix<f64> {
        let mut r = rng::stream(seed, &[]);
        DMatrix::from_fn(n, k, |_, _| StandardNormal.sample(&mut r))
    }

    fn random_pair(n: usize, m: usize, seed: u64) -> (MatrixHandle, ProjectionPair) {
        let a = MatrixHandle::Dense(gaussian(n, n, seed) + DMatrix::identity(n, n) * (n as f64).sqrt());
        let pair = ProjectionPair::new(&a, gaussian(n, m, seed + 1), gaussian(n, m, seed + 2)).unwrap();
        (a, pair)
    }

    #[test]
    fn p1_properties_on_random_probes() {
        let (a, pair) = random_pair(10, 4, 10);
        let p1 = make_p1(&pair);
        let mut r = rng::stream(11, &[]);
        for _ in 0..20 {
            let x = DVector::from_fn(10, |_, _| StandardNormal.sample(&mut r));
            let px = p1.apply(&x).unwrap();
            let ppx = p1.apply(&px).unwrap();
            assert!((&ppx - &px).norm() <= 1e-10 * x.norm());
            let wtapx = pair.w().tr_mul(&a.apply(&px).unwrap());
            assert!(wtapx.norm() <= 1e-10 * x.norm() * a.to_dense().norm());
        }
        for j in 0..4 {
            let vj = pair.v().column(j).into_owned();
            assert!(p1.apply(&vj).unwrap().norm() <= 1e-10 * vj.norm());
        }
    }

    #[test]
    fn p1_rank_is_n_minus_m() {
        let (_, pair) = random_pair(10, 4, 20);
        let dense = make_p1(&pair).to_dense().unwrap();
        assert_eq!(numerical_rank(&dense), 6);
    }

    #[test]
    fn p1_extreme_sizes() {
        let (a, full) = random_pair(5, 5, 30);
        assert!(make_p1(&full).to_dense().unwrap().norm() < 1e-10);
        let empty = ProjectionPair::new(&a, DMatrix::zeros(5, 0), DMatrix::zeros(5, 0)).unwrap();
        assert_eq!(make_p1(&empty).to_dense().unwrap(), DMatrix::identity(5, 5));
    }

    #[test]
    fn p1_transpose_is_adjoint() {
        let (_, pair) = random_pair(8, 3, 35);
        let p1 = make_p1(&pair);
        let dense = p1.to_dense().unwrap();
        let mut r = rng::stream(36, &[]);
        let x = DVector::from_fn(8, |_, _| StandardNormal.sample(&mut r));
        assert!((p1.apply_transpose(&x).unwrap() - dense.transpose() * &x).norm() < 1e-12);
    }

    #[test]
    fn p2_coordinate_complement() {
        let a = MatrixHandle::identity(3);
        let e1 = DMatrix::from_column_slice(3, 1, &[1.0, 0.0, 0.0]);
        let p2 = make_p2(&a, &e1).unwrap().to_dense().unwrap();
        let expected = DMatrix::from_diagonal(&DVector::from_vec(vec![0.0, 1.0, 1.0]));
        assert!((p2 - expected).norm() < 1e-15);
    }

    #[test]
    fn p2_matches_svd_nullspace_projector() {
        let (a, pair) = random_pair(12, 5, 40);
        let p2 = make_p2(&a, pair.w()).unwrap();
        let y = nullspace_basis(&pair.atw().transpose(), RANK_TOL).unwrap();
        assert!((p2.to_dense().unwrap() - y.projector()).norm() <= 1e-10);

        let mut r = rng::stream(41, &[]);
        for _ in 0..50 {
            let x = DVector::from_fn(12, |_, _| StandardNormal.sample(&mut r));
            let z = DVector::from_fn(12, |_, _| StandardNormal.sample(&mut r));
            let px = p2.apply(&x).unwrap();
            assert!((p2.apply(&px).unwrap() - &px).norm() <= 1e-12 * x.norm());
            let lhs = p2.apply(&x).unwrap().dot(&z);
            let rhs = x.dot(&p2.apply(&z).unwrap());
            assert!((lhs - rhs).abs() <= 1e-10 * x.norm() * z.norm());
        }
    }

    #[test]
    fn p2_rank_deficient() {
        let a = MatrixHandle::identity(4);
        let mut w = gaussian(4, 2, 50);
        let c0 = w.column(0).into_owned();
        w.set_column(1, &(c0 * 2.0));
        assert!(matches!(make_p2(&a, &w), Err(Error::RankDeficient { .. })));
    }

    #[test]
    fn densify_limit() {
        let a = MatrixHandle::identity(65);
        let p2 = make_p2(&a, &gaussian(65, 1, 60)).unwrap();
        assert!(p2.to_dense().is_err());
    }
}
