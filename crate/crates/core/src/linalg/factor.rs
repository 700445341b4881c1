use nalgebra::{DMatrix, DVector};

use super::basis::{OrthonormalBasis, RANK_TOL};
use crate::error::{Error, Result};

/// Relative tolerance for "vector lies in the covariance range".
pub const RANGE_TOL: f64 = 1e-8;

/// Covariance `Σ = X Xᵀ` held through its `n x k` factor `X`.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceFactor {
    factor: DMatrix<f64>,
}

/// Thin spectral data of `Σ = X Xᵀ` restricted to its numerical range:
/// `Σ = U diag(sigma²) Uᵀ`.
#[derive(Debug, Clone)]
pub struct RangeSpectrum {
    pub u: DMatrix<f64>,
    pub sigma: DVector<f64>,
}

impl RangeSpectrum {
    pub fn rank(&self) -> usize {
        self.sigma.len()
    }

    /// `log det D` over the nonzero eigenvalues `sigma²`.
    pub fn log_pseudo_det(&self) -> f64 {
        self.sigma.iter().map(|s| 2.0 * s.ln()).sum()
    }

    /// Splits `v` into range coordinates `Uᵀv` and the residual norm.
    pub fn decompose(&self, v: &DVector<f64>) -> (DVector<f64>, f64) {
        if self.rank() == 0 {
            return (DVector::zeros(0), v.norm());
        }
        let c = self.u.tr_mul(v);
        let residual = (v - &self.u * &c).norm();
        (c, residual)
    }

    /// `vᵀ Σ† v`, failing when `v` leaves the range.
    pub fn quadform(&self, v: &DVector<f64>) -> Result<f64> {
        let (c, residual) = self.decompose(v);
        let norm = v.norm();
        if residual > RANGE_TOL * norm {
            return Err(Error::OutOfRange { residual, norm });
        }
        Ok(self.quadform_of_coords(&c))
    }

    /// `vᵀ Σ† v` after projecting `v` onto the range; also returns the leak norm.
    pub fn quadform_clamped(&self, v: &DVector<f64>) -> (f64, f64) {
        let (c, residual) = self.decompose(v);
        (self.quadform_of_coords(&c), residual)
    }

    fn quadform_of_coords(&self, c: &DVector<f64>) -> f64 {
        c.iter().zip(self.sigma.iter()).map(|(ci, si)| (ci / si).powi(2)).sum()
    }

    pub fn project(&self, v: &DVector<f64>) -> DVector<f64> {
        if self.rank() == 0 {
            return DVector::zeros(v.len());
        }
        &self.u * self.u.tr_mul(v)
    }
}

impl CovarianceFactor {
    pub fn new(factor: DMatrix<f64>) -> Self {
        Self { factor }
    }

    /// Rank-0 covariance in dimension `n`.
    pub fn zero(n: usize) -> Self {
        Self { factor: DMatrix::zeros(n, 0) }
    }

    pub fn identity(n: usize) -> Self {
        Self { factor: DMatrix::identity(n, n) }
    }

    pub fn from_basis(basis: &OrthonormalBasis) -> Self {
        Self { factor: basis.columns().clone() }
    }

    /// Factor of a dense symmetric PSD matrix via its eigendecomposition.
    /// Eigenvalues below the relative rank threshold are dropped.
    pub fn from_psd(sigma: &DMatrix<f64>) -> Result<Self> {
        if !sigma.is_square() {
            return Err(Error::InvalidParameter("covariance must be square".into()));
        }
        let n = sigma.nrows();
        let sym = (sigma + sigma.transpose()) * 0.5;
        let eig = sym.symmetric_eigen();
        let lmax = eig.eigenvalues.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
        let keep: Vec<usize> = (0..n).filter(|&i| eig.eigenvalues[i] > RANK_TOL * lmax).collect();
        let mut factor = DMatrix::zeros(n, keep.len());
        for (c, &i) in keep.iter().enumerate() {
            factor.set_column(c, &(eig.eigenvectors.column(i) * eig.eigenvalues[i].sqrt()));
        }
        Ok(Self { factor })
    }

    pub fn factor(&self) -> &DMatrix<f64> {
        &self.factor
    }

    pub fn dim(&self) -> usize {
        self.factor.nrows()
    }

    /// Number of factor columns.
    pub fn rank(&self) -> usize {
        self.factor.ncols()
    }

    /// Factor of `c² Σ`.
    pub fn scaled(&self, c: f64) -> Self {
        Self { factor: &self.factor * c }
    }

    /// Factor of `Σ₁ + Σ₂`.
    pub fn hstack(&self, other: &CovarianceFactor) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: other.dim() });
        }
        let mut f = DMatrix::zeros(self.dim(), self.rank() + other.rank());
        f.columns_mut(0, self.rank()).copy_from(&self.factor);
        f.columns_mut(self.rank(), other.rank()).copy_from(&other.factor);
        Ok(Self { factor: f })
    }

    /// Dense `X Xᵀ`.
    pub fn to_dense(&self) -> DMatrix<f64> {
        &self.factor * self.factor.transpose()
    }

    /// `X δ` for a coefficient vector of length `rank`.
    pub fn apply(&self, delta: &DVector<f64>) -> DVector<f64> {
        if self.rank() == 0 {
            return DVector::zeros(self.dim());
        }
        &self.factor * delta
    }

    /// Thin SVD of the factor restricted to singular values above the rank threshold.
    pub fn spectrum(&self) -> RangeSpectrum {
        let n = self.dim();
        if self.rank() == 0 || n == 0 {
            return RangeSpectrum { u: DMatrix::zeros(n, 0), sigma: DVector::zeros(0) };
        }
        let svd = self.factor.clone().svd(true, false);
        let u = svd.u.expect("requested left singular vectors");
        let smax = svd.singular_values.max();
        let keep: Vec<usize> = (0..svd.singular_values.len())
            .filter(|&i| svd.singular_values[i] > RANK_TOL * smax)
            .collect();
        let mut ur = DMatrix::zeros(n, keep.len());
        let mut sr = DVector::zeros(keep.len());
        for (c, &i) in keep.iter().enumerate() {
            ur.set_column(c, &u.column(i));
            sr[c] = svd.singular_values[i];
        }
        RangeSpectrum { u: ur, sigma: sr }
    }

    /// `vᵀ Σ† v`, computed from the thin SVD of the factor.
    pub fn pseudo_quadform(&self, v: &DVector<f64>) -> Result<f64> {
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: v.len() });
        }
        self.spectrum().quadform(v)
    }
}

/// Free-function form of [`CovarianceFactor::pseudo_quadform`].
pub fn pseudo_quadform(sigma: &CovarianceFactor, v: &DVector<f64>) -> Result<f64> {
    sigma.pseudo_quadform(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::orthonormalize;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn gaussian(n: usize, k: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
        DMatrix::from_fn(n, k, |_, _| StandardNormal.sample(rng))
    }

    #[test]
    fn identity_covariance_gives_squared_norm() {
        let v = DVector::from_vec(vec![1.0, -2.0, 0.5]);
        let q = pseudo_quadform(&CovarianceFactor::identity(3), &v).unwrap();
        assert!((q - v.norm_squared()).abs() < 1e-14);
    }

    #[test]
    fn orthonormal_factor_gives_coefficient_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let y = orthonormalize(&gaussian(7, 3, &mut rng)).unwrap();
        let c = DVector::from_vec(vec![0.3, -1.0, 2.0]);
        let v = y.columns() * &c;
        let q = pseudo_quadform(&CovarianceFactor::from_basis(&y), &v).unwrap();
        assert!((q - c.norm_squared()).abs() < 1e-12);
    }

    #[test]
    fn matches_dense_pseudo_inverse() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = gaussian(6, 3, &mut rng);
        let sigma = &x * x.transpose();
        let pinv = sigma.clone().pseudo_inverse(1e-10).unwrap();
        let v = &x * DVector::from_fn(3, |_, _| StandardNormal.sample(&mut rng));
        let oracle = (v.transpose() * &pinv * &v)[(0, 0)];
        let q = pseudo_quadform(&CovarianceFactor::new(x), &v).unwrap();
        assert!((q - oracle).abs() <= 1e-10 * oracle.abs());
    }

    #[test]
    fn out_of_range_is_rejected() {
        let x = DMatrix::from_column_slice(3, 1, &[1.0, 1.0, 0.0]);
        let v = DVector::from_vec(vec![1.0, 0.0, 0.0]);
        assert!(matches!(
            pseudo_quadform(&CovarianceFactor::new(x), &v),
            Err(Error::OutOfRange { .. })
        ));
    }

    #[test]
    fn zero_covariance_accepts_only_zero() {
        let z = CovarianceFactor::zero(3);
        assert_eq!(z.pseudo_quadform(&DVector::zeros(3)).unwrap(), 0.0);
        assert!(z.pseudo_quadform(&DVector::from_element(3, 1.0)).is_err());
    }

    #[test]
    fn from_psd_reproduces_matrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let x = gaussian(5, 2, &mut rng);
        let sigma = &x * x.transpose();
        let f = CovarianceFactor::from_psd(&sigma).unwrap();
        assert_eq!(f.rank(), 2);
        assert!((f.to_dense() - sigma).norm() < 1e-12);
    }
}
