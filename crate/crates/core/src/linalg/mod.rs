//! Dense/CSR matrices, orthonormal bases, covariance factors and the random
//! SPD ensemble.

mod basis;
mod factor;
mod matrix;
mod spd;

pub use basis::{nullspace_basis, numerical_rank, orthonormalize, OrthonormalBasis, RANK_TOL};
pub use factor::{pseudo_quadform, CovarianceFactor, RangeSpectrum, RANGE_TOL};
pub use matrix::{CsrMatrix, MatrixHandle};
pub use spd::{haar_orthogonal, random_spd, random_spd_with_eigs, spd_with_spectrum, SpdEnsembleSpec};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Dense LU solve `A x = b`.
pub fn dense_solve(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    a.clone()
        .lu()
        .solve(b)
        .ok_or_else(|| Error::InvalidMatrix("singular matrix in dense solve".into()))
}

/// Dense inverse.
pub fn dense_inverse(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    a.clone()
        .try_inverse()
        .ok_or_else(|| Error::InvalidMatrix("singular matrix in dense inverse".into()))
}
