use nalgebra::DVector;
use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::linalg::{CovarianceFactor, RangeSpectrum};

const LN_2PI: f64 = 1.837_877_066_409_345_3;

fn standard_normal<R: Rng + ?Sized>(k: usize, rng: &mut R) -> DVector<f64> {
    DVector::from_fn(k, |_, _| StandardNormal.sample(rng))
}

/// Gaussian supported on `mean + range(Σ)`; density is taken with respect to
/// Lebesgue measure on that affine subspace.
#[derive(Debug, Clone)]
pub struct DegenerateGaussian {
    mean: DVector<f64>,
    cov: CovarianceFactor,
    spectrum: RangeSpectrum,
}

impl DegenerateGaussian {
    pub fn new(mean: DVector<f64>, cov: CovarianceFactor) -> Result<Self> {
        if mean.len() != cov.dim() {
            return Err(Error::DimensionMismatch { expected: cov.dim(), found: mean.len() });
        }
        let spectrum = cov.spectrum();
        Ok(Self { mean, cov, spectrum })
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &CovarianceFactor {
        &self.cov
    }

    /// Numerical rank `k` of `Σ`.
    pub fn rank(&self) -> usize {
        self.spectrum.rank()
    }

    /// `mean + X δ` with `δ ~ N(0, I)`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> DVector<f64> {
        &self.mean + self.cov.apply(&standard_normal(self.cov.rank(), rng))
    }

    /// Log density on the support; [`Error::OutOfRange`] off it.
    pub fn logpdf(&self, x: &DVector<f64>) -> Result<f64> {
        if x.len() != self.mean.len() {
            return Err(Error::DimensionMismatch { expected: self.mean.len(), found: x.len() });
        }
        let q = self.spectrum.quadform(&(x - &self.mean))?;
        let k = self.rank() as f64;
        Ok(-0.5 * q - 0.5 * (k * LN_2PI + self.spectrum.log_pseudo_det()))
    }
}

/// Multivariate Student supported on `mean + range(Σ)` with `dof` degrees of freedom.
#[derive(Debug, Clone)]
pub struct DegenerateStudent {
    mean: DVector<f64>,
    scale: CovarianceFactor,
    dof: f64,
    spectrum: RangeSpectrum,
}

impl DegenerateStudent {
    pub fn new(mean: DVector<f64>, scale: CovarianceFactor, dof: f64) -> Result<Self> {
        if !(dof > 0.0) {
            return Err(Error::InvalidParameter(format!("Student dof must be > 0, got {dof}")));
        }
        if mean.len() != scale.dim() {
            return Err(Error::DimensionMismatch { expected: scale.dim(), found: mean.len() });
        }
        let spectrum = scale.spectrum();
        Ok(Self { mean, scale, dof, spectrum })
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn scale(&self) -> &CovarianceFactor {
        &self.scale
    }

    pub fn dof(&self) -> f64 {
        self.dof
    }

    pub fn rank(&self) -> usize {
        self.spectrum.rank()
    }

    /// Scale mixture: `s ~ IG(ν/2, ν/2)`, then `mean + √s X δ`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> DVector<f64> {
        let half = self.dof / 2.0;
        let precision: f64 = Gamma::new(half, 1.0 / half).expect("dof > 0").sample(rng);
        let s = 1.0 / precision;
        &self.mean + self.scale.apply(&standard_normal(self.scale.rank(), rng)) * s.sqrt()
    }

    pub fn logpdf(&self, x: &DVector<f64>) -> Result<f64> {
        if x.len() != self.mean.len() {
            return Err(Error::DimensionMismatch { expected: self.mean.len(), found: x.len() });
        }
        let q = self.spectrum.quadform(&(x - &self.mean))?;
        let k = self.rank() as f64;
        let nu = self.dof;
        let ln_c = ln_gamma((nu + k) / 2.0)
            - ln_gamma(nu / 2.0)
            - 0.5 * (k * (std::f64::consts::PI * nu).ln() + self.spectrum.log_pseudo_det());
        Ok(ln_c - 0.5 * (nu + k) * (q / nu).ln_1p())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::ig_pdf;
    use crate::linalg::{orthonormalize, spd_with_spectrum};
    use crate::rng;
    use nalgebra::DMatrix;

    fn sample_cov(xs: &[DVector<f64>]) -> DMatrix<f64> {
        let n = xs[0].len();
        let m = xs.iter().fold(DVector::zeros(n), |a, x| a + x) / xs.len() as f64;
        xs.iter().fold(DMatrix::zeros(n, n), |acc, x| acc + (x - &m) * (x - &m).transpose())
            / (xs.len() as f64 - 1.0)
    }

    #[test]
    fn rank_zero_is_point_mass() {
        let mean = DVector::from_vec(vec![1.0, 2.0]);
        let g = DegenerateGaussian::new(mean.clone(), CovarianceFactor::zero(2)).unwrap();
        assert_eq!(g.sample(&mut rng::stream(0, &[])), mean);
        let t = DegenerateStudent::new(mean.clone(), CovarianceFactor::zero(2), 3.0).unwrap();
        assert_eq!(t.sample(&mut rng::stream(0, &[])), mean);
    }

    #[test]
    fn sample_covariance_converges() {
        let g = DegenerateGaussian::new(DVector::zeros(2), CovarianceFactor::identity(2)).unwrap();
        let mut r = rng::stream(1, &[]);
        let xs: Vec<_> = (0..100_000).map(|_| g.sample(&mut r)).collect();
        let c = sample_cov(&xs);
        assert!((c - DMatrix::<f64>::identity(2, 2)).abs().max() < 0.05);
    }

    #[test]
    fn frobenius_error_decreases_with_sample_size() {
        let mut r = rng::stream(2, &[]);
        let x = DMatrix::from_fn(3, 2, |i, j| (i + 2 * j) as f64 * 0.3 + 0.1);
        let g = DegenerateGaussian::new(DVector::zeros(3), CovarianceFactor::new(x.clone())).unwrap();
        let sigma = &x * x.transpose();
        // mean over replicates so the comparison is about the expected error
        let errs: Vec<f64> = [1_000, 10_000, 100_000]
            .iter()
            .map(|&n| {
                (0..6)
                    .map(|_| {
                        let xs: Vec<_> = (0..n).map(|_| g.sample(&mut r)).collect();
                        (sample_cov(&xs) - &sigma).norm()
                    })
                    .sum::<f64>()
                    / 6.0
            })
            .collect();
        assert!(errs[0] > errs[1] && errs[1] > errs[2], "{errs:?}");
    }

    #[test]
    fn samples_stay_in_range() {
        let mut r = rng::stream(3, &[]);
        let y = orthonormalize(&DMatrix::from_fn(5, 2, |_, _| StandardNormal.sample(&mut r))).unwrap();
        let mean = DVector::from_vec(vec![1.0, -1.0, 0.0, 2.0, 0.5]);
        let g = DegenerateGaussian::new(mean.clone(), CovarianceFactor::from_basis(&y)).unwrap();
        for _ in 0..100 {
            let d = g.sample(&mut r) - &mean;
            assert!((&d - y.project(&d)).norm() <= 1e-12);
        }
    }

    #[test]
    fn logpdf_standard_normal_mode() {
        let g = DegenerateGaussian::new(DVector::zeros(1), CovarianceFactor::identity(1)).unwrap();
        let lp = g.logpdf(&DVector::zeros(1)).unwrap();
        assert!((lp + 0.5 * LN_2PI).abs() < 1e-15);
    }

    #[test]
    fn logpdf_matches_dense_formula() {
        let mut r = rng::stream(4, &[]);
        let sigma = spd_with_spectrum(&DVector::from_vec(vec![0.5, 1.0, 2.0, 3.5]), &mut r);
        let mean = DVector::from_vec(vec![0.1, 0.2, -0.3, 1.0]);
        let g = DegenerateGaussian::new(mean.clone(), CovarianceFactor::from_psd(&sigma).unwrap()).unwrap();
        let inv = sigma.clone().try_inverse().unwrap();
        let det = sigma.determinant();
        for _ in 0..5 {
            let x = DVector::from_fn(4, |_, _| StandardNormal.sample(&mut r));
            let d = &x - &mean;
            let dense = -0.5 * (d.transpose() * &inv * &d)[(0, 0)] - 0.5 * (4.0 * LN_2PI + det.ln());
            assert!((g.logpdf(&x).unwrap() - dense).abs() < 1e-10);
        }
    }

    #[test]
    fn logpdf_off_support() {
        let x = DMatrix::from_column_slice(3, 1, &[1.0, 1.0, 1.0]);
        let g = DegenerateGaussian::new(DVector::zeros(3), CovarianceFactor::new(x)).unwrap();
        let off = DVector::from_vec(vec![1.0, 0.0, 0.0]);
        assert!(matches!(g.logpdf(&off), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn student_variance_matches_moment() {
        let t = DegenerateStudent::new(DVector::zeros(1), CovarianceFactor::identity(1), 4.0).unwrap();
        let mut r = rng::stream(5, &[]);
        let xs: Vec<f64> = (0..100_000).map(|_| t.sample(&mut r)[0]).collect();
        let v = crate::stats::variance(&xs);
        assert!((v - 2.0).abs() <= 0.2, "variance {v}");
    }

    #[test]
    fn student_large_dof_approaches_gaussian() {
        let t = DegenerateStudent::new(DVector::zeros(2), CovarianceFactor::identity(2), 1e6).unwrap();
        let mut r = rng::stream(6, &[]);
        let xs: Vec<_> = (0..100_000).map(|_| t.sample(&mut r)).collect();
        assert!((sample_cov(&xs) - DMatrix::<f64>::identity(2, 2)).abs().max() < 0.05);
    }

    #[test]
    fn student_is_gaussian_scale_mixture() {
        // ∫ N(x | μ, sΣ) IG(s | α, β) ds = St_{2α}(x | μ, (β/α) Σ), integrated on a log grid.
        let mut r = rng::stream(7, &[]);
        let (alpha, beta) = (2.5, 1.5);
        for n in 1..=4usize {
            let x = DMatrix::from_fn(n, n.saturating_sub(1).max(1), |_, _| StandardNormal.sample(&mut r));
            let mean = DVector::from_fn(n, |_, _| StandardNormal.sample(&mut r));
            let cov = CovarianceFactor::new(x.clone());
            let t = DegenerateStudent::new(mean.clone(), cov.scaled((beta / alpha as f64).sqrt()), 2.0 * alpha).unwrap();
            for _ in 0..5 {
                let pt = &mean + &x * DVector::from_fn(x.ncols(), |_, _| StandardNormal.sample(&mut r));
                let (lo, hi, m) = (-25.0f64, 25.0f64, 40_000usize);
                let h = (hi - lo) / m as f64;
                let mix: f64 = (0..=m)
                    .map(|i| {
                        let u = lo + i as f64 * h;
                        let s = u.exp();
                        let g = DegenerateGaussian::new(mean.clone(), cov.scaled(s.sqrt())).unwrap();
                        let w = if i == 0 || i == m { 0.5 } else { 1.0 };
                        w * (g.logpdf(&pt).unwrap().exp() * ig_pdf(s, alpha, beta) * s)
                    })
                    .sum::<f64>()
                    * h;
                let st = t.logpdf(&pt).unwrap().exp();
                assert!((mix - st).abs() <= 1e-4 * st.max(1.0), "n={n}: {mix} vs {st}");
            }
        }
    }
}
