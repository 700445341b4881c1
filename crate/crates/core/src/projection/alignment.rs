use nalgebra::DVector;

use crate::distributions::{f_cdf, f_pdf, DensityEstimate};
use crate::error::{Error, Result};
use crate::linalg::OrthonormalBasis;

/// `eᵀP⊥e / eᵀe` with `P⊥` the orthogonal projector onto `ysub`.
pub fn alignment_cosine(error: &DVector<f64>, ysub: &OrthonormalBasis) -> Result<f64> {
    if error.len() != ysub.dim() {
        return Err(Error::DimensionMismatch { expected: ysub.dim(), found: error.len() });
    }
    let ee = error.norm_squared();
    if !(ee > 0.0) {
        return Err(Error::InvalidParameter("alignment of a zero error is undefined".into()));
    }
    let c = ysub.columns().tr_mul(error).norm_squared() / ee;
    Ok(c.clamp(0.0, 1.0))
}

struct AngleLaw {
    d1: f64,
    d2: f64,
    a: f64,
}

impl AngleLaw {
    fn new(n: usize, m: usize, p: usize, s: f64) -> Result<Self> {
        if p == 0 || m + p >= n {
            return Err(Error::InvalidParameter(format!("angle law needs p >= 1 and n-m-p >= 1 (n={n}, m={m}, p={p})")));
        }
        if !(s > 0.0) {
            return Err(Error::InvalidParameter(format!("angle law needs s > 0, got {s}")));
        }
        let d1 = (n - m - p) as f64;
        let d2 = p as f64;
        Ok(Self { d1, d2, a: d1 / (s * s * d2) })
    }

    /// `z` such that `c = 1/(1 + a z)`.
    fn z(&self, c: f64) -> f64 {
        (1.0 / c - 1.0) / self.a
    }
}

/// Density of the cosine `1/(1 + (n−m−p) z/(s²p))`, `z ~ F(n−m−p, p)`.
pub fn alignment_density(n: usize, m: usize, p: usize, s: f64, grid: &[f64]) -> Result<DensityEstimate> {
    let law = AngleLaw::new(n, m, p, s)?;
    Ok(DensityEstimate::from_fn(grid, |c| {
        if c <= 0.0 || c >= 1.0 {
            return 0.0;
        }
        f_pdf(law.z(c), law.d1, law.d2) / (law.a * c * c)
    }))
}

/// `P(cos ≤ c)`.
pub fn alignment_cdf(n: usize, m: usize, p: usize, s: f64, c: f64) -> Result<f64> {
    let law = AngleLaw::new(n, m, p, s)?;
    Ok(if c <= 0.0 {
        0.0
    } else if c >= 1.0 {
        1.0
    } else {
        1.0 - f_cdf(law.z(c), law.d1, law.d2)
    })
}
