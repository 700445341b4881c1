use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{nullspace_basis, CovarianceFactor, MatrixHandle, RANK_TOL};

/// Conditions `𝒩(x₀, XXᵀ)` on `SᵀAx = Sᵀb`.
///
/// With `B = XᵀAᵀS = Q_B R_B`, the mean is `x₀ + X Q_B R_B⁻ᵀ Sᵀ(b − Ax₀)` and
/// the covariance factor is `X N` where `N` spans `Null(Bᵀ)`. The downdate is
/// therefore PSD by construction.
pub fn general_posterior(
    sigma0: &CovarianceFactor,
    a: &MatrixHandle,
    s: &DMatrix<f64>,
    b: &DVector<f64>,
    x0: &DVector<f64>,
) -> Result<(DVector<f64>, CovarianceFactor)> {
    let n = a.nrows();
    for found in [sigma0.dim(), s.nrows(), b.len(), x0.len()] {
        if found != n {
            return Err(Error::DimensionMismatch { expected: n, found });
        }
    }
    let q = s.ncols();
    if q == 0 {
        return Ok((x0.clone(), sigma0.clone()));
    }
    let x = sigma0.factor();
    let k = x.ncols();
    if k < q {
        return Err(Error::IllPosedConditioning);
    }
    let bmat = a.apply_block(x)?.tr_mul(s);
    let sv = bmat.clone().svd(false, false).singular_values;
    let smax = sv.max();
    if !(smax > 0.0) || sv.min() <= RANK_TOL * smax {
        return Err(Error::IllPosedConditioning);
    }
    let residual = s.tr_mul(&(b - a.apply(x0)?));
    let qr = bmat.clone().qr();
    let coeff = qr
        .r()
        .transpose()
        .solve_lower_triangular(&residual)
        .ok_or(Error::IllPosedConditioning)?;
    let mean = x0 + x * (qr.q() * coeff);
    let null = nullspace_basis(&bmat.transpose(), RANK_TOL)?;
    let cov = CovarianceFactor::new(x * null.columns());
    Ok((mean, cov))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{random_spd, spd_with_spectrum, SpdEnsembleSpec};
    use crate::projection::{petrov_galerkin_solve, ProjectionPair};
    use crate::rng;
    use rand_distr::{Distribution, StandardNormal};

    fn gaussian(n: usize, k: usize, seed: u64) -> DMatrix<f64> {
        let mut r = rng::stream(seed, &[]);
        DMatrix::from_fn(n, k, |_, _| StandardNormal.sample(&mut r))
    }

    fn setup(n: usize, m: usize, seed: u64) -> (MatrixHandle, ProjectionPair, DVector<f64>) {
        let a = MatrixHandle::Dense(gaussian(n, n, seed) + DMatrix::identity(n, n) * (n as f64).sqrt());
        let pair = ProjectionPair::new(&a, gaussian(n, m, seed + 1), gaussian(n, m, seed + 2)).unwrap();
        let b = gaussian(n, 1, seed + 3).column(0).into_owned();
        (a, pair, b)
    }

    #[test]
    fn head_only_prior_collapses() {
        let (a, pair, b) = setup(10, 4, 1);
        let x0 = DVector::zeros(10);
        let (mean, cov) = general_posterior(&CovarianceFactor::new(pair.v().clone()), &a, pair.w(), &b, &x0).unwrap();
        let xt = petrov_galerkin_solve(&a, &b, &x0, &pair).unwrap();
        assert_eq!(cov.rank(), 0);
        assert!((mean - &xt).norm() <= 1e-10 * xt.norm());
    }

    #[test]
    fn structured_prior_leaves_tail() {
        let (a, pair, b) = setup(12, 5, 10);
        let y = nullspace_basis(&pair.atw().transpose(), RANK_TOL).unwrap();
        let psi = CovarianceFactor::new(y.columns() * gaussian(7, 7, 14));
        let sigma0 = CovarianceFactor::new(pair.v().clone()).hstack(&psi).unwrap();
        let x0 = gaussian(12, 1, 15).column(0).into_owned();
        let (mean, cov) = general_posterior(&sigma0, &a, pair.w(), &b, &x0).unwrap();
        let xt = petrov_galerkin_solve(&a, &b, &x0, &pair).unwrap();
        assert!((mean - &xt).norm() <= 1e-10 * xt.norm());
        let psi_d = psi.to_dense();
        assert!((cov.to_dense() - &psi_d).norm() <= 1e-9 * psi_d.norm());
    }

    #[test]
    fn inverse_prior_matches_closed_form() {
        let spec = SpdEnsembleSpec { n: 6, scale: 10.0, seed: 20 };
        let a = random_spd(&spec, &mut rng::stream(20, &[])).unwrap();
        let ainv = a.to_dense().try_inverse().unwrap();
        let v = gaussian(6, 2, 21);
        let b = gaussian(6, 1, 22).column(0).into_owned();
        let (_, cov) =
            general_posterior(&CovarianceFactor::from_psd(&ainv).unwrap(), &a, &v, &b, &DVector::zeros(6)).unwrap();
        let core_inv = (v.transpose() * a.to_dense() * &v).try_inverse().unwrap();
        let expected = &ainv - &v * core_inv * v.transpose();
        assert!((cov.to_dense() - &expected).norm() <= 1e-10 * ainv.norm());
    }

    #[test]
    fn posterior_is_psd() {
        let mut r = rng::stream(30, &[]);
        let sigma = spd_with_spectrum(&DVector::from_fn(8, |i, _| 1.0 + i as f64), &mut r);
        let a = MatrixHandle::Dense(gaussian(8, 8, 31) + DMatrix::identity(8, 8) * 3.0);
        let s = gaussian(8, 3, 32);
        let (_, cov) =
            general_posterior(&CovarianceFactor::from_psd(&sigma).unwrap(), &a, &s, &DVector::zeros(8), &DVector::zeros(8))
                .unwrap();
        let eig = cov.to_dense().symmetric_eigen().eigenvalues;
        assert!(eig.min() >= -1e-10);
        assert_eq!(cov.rank(), 5);
    }

    #[test]
    fn singular_inner_matrix() {
        let a = MatrixHandle::identity(4);
        let x = DMatrix::from_column_slice(4, 1, &[1.0, 0.0, 0.0, 0.0]);
        let s = DMatrix::from_column_slice(4, 1, &[0.0, 1.0, 0.0, 0.0]);
        let r = general_posterior(&CovarianceFactor::new(x), &a, &s, &DVector::zeros(4), &DVector::zeros(4));
        assert_eq!(r.unwrap_err(), Error::IllPosedConditioning);
    }
}
