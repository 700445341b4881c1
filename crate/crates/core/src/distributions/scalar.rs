use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, Continuous, ContinuousCDF, FisherSnedecor};
use statrs::function::beta::ln_beta;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// Inverse-gamma density `βᵅ/Γ(α) x^{-α-1} e^{-β/x}`; zero off `(0, ∞)`.
pub fn ig_pdf(x: f64, alpha: f64, beta: f64) -> f64 {
    ig_ln_pdf(x, alpha, beta).exp()
}

pub fn ig_ln_pdf(x: f64, alpha: f64, beta: f64) -> f64 {
    if !(x > 0.0) || !(alpha > 0.0) || !(beta > 0.0) {
        return f64::NEG_INFINITY;
    }
    alpha * beta.ln() - ln_gamma(alpha) - (alpha + 1.0) * x.ln() - beta / x
}

pub fn chi2_pdf(x: f64, k: f64) -> f64 {
    if !(x >= 0.0) {
        return 0.0;
    }
    ChiSquared::new(k).map(|d| d.pdf(x)).unwrap_or(0.0)
}

pub fn chi2_cdf(x: f64, k: f64) -> f64 {
    if !(x > 0.0) {
        return 0.0;
    }
    ChiSquared::new(k).map(|d| d.cdf(x)).unwrap_or(f64::NAN)
}

pub fn chi2_quantile(p: f64, k: f64) -> f64 {
    ChiSquared::new(k).map(|d| d.inverse_cdf(p)).unwrap_or(f64::NAN)
}

pub fn f_pdf(x: f64, d1: f64, d2: f64) -> f64 {
    if !(x > 0.0) || !(d1 > 0.0 && d2 > 0.0) {
        // the density at 0 is finite only for d1 <= 2
        return if x == 0.0 { FisherSnedecor::new(d1, d2).map(|d| d.pdf(0.0)).unwrap_or(0.0) } else { 0.0 };
    }
    // log space: statrs overflows for large degrees of freedom
    let ln = 0.5 * (d1 * (d1 * x).ln() + d2 * d2.ln() - (d1 + d2) * (d1 * x + d2).ln())
        - x.ln()
        - ln_beta(0.5 * d1, 0.5 * d2);
    ln.exp()
}

pub fn f_cdf(x: f64, d1: f64, d2: f64) -> f64 {
    if !(x > 0.0) {
        return 0.0;
    }
    FisherSnedecor::new(d1, d2).map(|d| d.cdf(x)).unwrap_or(f64::NAN)
}

pub fn f_quantile(p: f64, d1: f64, d2: f64) -> f64 {
    FisherSnedecor::new(d1, d2).map(|d| d.inverse_cdf(p)).unwrap_or(f64::NAN)
}

/// Inverse-gamma law on a covariance scale `s`.
///
/// `(0, 0)` is the improper reference prior `p(s) ∝ 1/s`; it is accepted as a
/// prior but cannot be sampled from or used for predictive densities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalePosterior {
    pub alpha: f64,
    pub beta: f64,
}

impl Default for ScalePosterior {
    fn default() -> Self {
        Self::improper()
    }
}

impl ScalePosterior {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha >= 0.0 && beta >= 0.0) || !alpha.is_finite() || !beta.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "inverse-gamma parameters must be >= 0, got ({alpha}, {beta})"
            )));
        }
        Ok(Self { alpha, beta })
    }

    pub fn improper() -> Self {
        Self { alpha: 0.0, beta: 0.0 }
    }

    pub fn is_proper(&self) -> bool {
        self.alpha > 0.0 && self.beta > 0.0
    }

    /// Conjugate update `(α + Δα, β + Δβ)`.
    pub fn updated(&self, d_alpha: f64, d_beta: f64) -> Self {
        Self { alpha: self.alpha + d_alpha, beta: self.beta + d_beta }
    }

    /// `E[s] = β/(α − 1)`.
    pub fn mean(&self) -> Result<f64> {
        if self.alpha <= 1.0 {
            return Err(Error::UndefinedMean(self.alpha));
        }
        Ok(self.beta / (self.alpha - 1.0))
    }

    pub fn pdf(&self, s: f64) -> f64 {
        ig_pdf(s, self.alpha, self.beta)
    }

    pub fn require_proper(&self) -> Result<()> {
        if self.is_proper() {
            Ok(())
        } else {
            Err(Error::ImproperPosterior { alpha: self.alpha, beta: self.beta })
        }
    }
}
