use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Exp, StandardNormal};
use serde::{Deserialize, Serialize};

use super::matrix::MatrixHandle;
use crate::error::{Error, Result};

/// Random SPD ensemble `A = U D Uᵀ` with Haar `U` and i.i.d. exponential eigenvalues.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpdEnsembleSpec {
    pub n: usize,
    /// Mean of the exponential eigenvalue distribution.
    pub scale: f64,
    pub seed: u64,
}

impl SpdEnsembleSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidParameter("SPD ensemble needs n >= 1".into()));
        }
        if !(self.scale > 0.0) || !self.scale.is_finite() {
            return Err(Error::InvalidParameter(format!("eigenvalue scale must be > 0, got {}", self.scale)));
        }
        Ok(())
    }
}

/// Haar-distributed orthogonal matrix: QR of a Gaussian matrix with the
/// columns of `Q` multiplied by the signs of `diag(R)`.
pub fn haar_orthogonal<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DMatrix<f64> {
    let g = DMatrix::from_fn(n, n, |_, _| StandardNormal.sample(rng));
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// `U diag(eigs) Uᵀ` with Haar `U`, symmetrized exactly.
pub fn spd_with_spectrum<R: Rng + ?Sized>(eigs: &DVector<f64>, rng: &mut R) -> DMatrix<f64> {
    let n = eigs.len();
    let u = haar_orthogonal(n, rng);
    let mut a = &u * DMatrix::from_diagonal(eigs) * u.transpose();
    for j in 0..n {
        for i in (j + 1)..n {
            a[(i, j)] = a[(j, i)];
        }
    }
    a
}

/// Draws one matrix of the ensemble and returns it together with its eigenvalues.
pub fn random_spd_with_eigs<R: Rng + ?Sized>(
    spec: &SpdEnsembleSpec,
    rng: &mut R,
) -> Result<(MatrixHandle, DVector<f64>)> {
    spec.validate()?;
    let exp = Exp::new(1.0 / spec.scale).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let eigs = DVector::from_fn(spec.n, |_, _| loop {
        let l: f64 = exp.sample(rng);
        if l > 0.0 {
            break l;
        }
    });
    Ok((MatrixHandle::Dense(spd_with_spectrum(&eigs, rng)), eigs))
}

pub fn random_spd<R: Rng + ?Sized>(spec: &SpdEnsembleSpec, rng: &mut R) -> Result<MatrixHandle> {
    random_spd_with_eigs(spec, rng).map(|(a, _)| a)
}
