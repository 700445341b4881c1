use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Relative singular-value threshold below which a direction counts as null.
pub const RANK_TOL: f64 = 1e-12;

/// Matrix with orthonormal columns.
#[derive(Debug, Clone, PartialEq)]
pub struct OrthonormalBasis {
    q: DMatrix<f64>,
}

impl OrthonormalBasis {
    /// Wraps `q` without checking orthonormality.
    pub fn from_orthonormal_unchecked(q: DMatrix<f64>) -> Self {
        Self { q }
    }

    pub fn empty(n: usize) -> Self {
        Self { q: DMatrix::zeros(n, 0) }
    }

    pub fn columns(&self) -> &DMatrix<f64> {
        &self.q
    }

    pub fn into_columns(self) -> DMatrix<f64> {
        self.q
    }

    pub fn dim(&self) -> usize {
        self.q.nrows()
    }

    pub fn rank(&self) -> usize {
        self.q.ncols()
    }

    /// Orthogonal projection `Q Qᵀ x`.
    pub fn project(&self, x: &DVector<f64>) -> DVector<f64> {
        if self.rank() == 0 {
            return DVector::zeros(x.len());
        }
        &self.q * (self.q.tr_mul(x))
    }

    /// Dense `Q Qᵀ`.
    pub fn projector(&self) -> DMatrix<f64> {
        &self.q * self.q.transpose()
    }

    /// Spectral norm of `QᵀQ - I`.
    pub fn orthonormality_defect(&self) -> f64 {
        let k = self.rank();
        if k == 0 {
            return 0.0;
        }
        let g = self.q.tr_mul(&self.q) - DMatrix::<f64>::identity(k, k);
        g.svd(false, false).singular_values.max()
    }
}

/// Gram-Schmidt with one full re-orthogonalization pass (CGS2).
pub fn orthonormalize(cols: &DMatrix<f64>) -> Result<OrthonormalBasis> {
    let n = cols.nrows();
    let k = cols.ncols();
    let scale = cols.norm();
    let mut q = DMatrix::<f64>::zeros(n, k);
    for j in 0..k {
        let mut w: DVector<f64> = cols.column(j).into_owned();
        for _ in 0..2 {
            if j > 0 {
                let qj = q.columns(0, j);
                let h = qj.tr_mul(&w);
                w -= qj * h;
            }
        }
        let norm = w.norm();
        if !(norm > RANK_TOL * scale) {
            return Err(Error::RankDeficient { column: j });
        }
        q.set_column(j, &(w / norm));
    }
    Ok(OrthonormalBasis { q })
}

/// Orthonormal basis of the nullspace of the `k x n` matrix `m`.
///
/// Singular values at or below `tol * sigma_max` are treated as zero.
pub fn nullspace_basis(m: &DMatrix<f64>, tol: f64) -> Result<OrthonormalBasis> {
    let (k, n) = m.shape();
    if k > n {
        return Err(Error::InvalidParameter(format!("nullspace_basis expects k <= n, got {k} x {n}")));
    }
    if n == 0 {
        return Ok(OrthonormalBasis::empty(0));
    }
    // Pad to square so the SVD returns a complete set of right singular vectors.
    let mut padded = DMatrix::<f64>::zeros(n, n);
    padded.rows_mut(0, k).copy_from(m);
    let svd = padded.svd(false, true);
    let vt = svd.v_t.expect("requested right singular vectors");
    let sigma_max = svd.singular_values.max();
    let null: Vec<usize> = (0..n).filter(|&i| svd.singular_values[i] <= tol * sigma_max).collect();
    let mut q = DMatrix::zeros(n, null.len());
    for (c, &i) in null.iter().enumerate() {
        q.set_column(c, &vt.row(i).transpose());
    }
    Ok(OrthonormalBasis { q })
}

/// Numerical rank with the crate-wide relative threshold.
pub fn numerical_rank(m: &DMatrix<f64>) -> usize {
    if m.is_empty() {
        return 0;
    }
    let s = m.clone().svd(false, false).singular_values;
    let smax = s.max();
    s.iter().filter(|&&v| v > RANK_TOL * smax).count()
}
