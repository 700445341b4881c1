use std::fmt;
use std::fmt::Write as _;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::distributions::{chi2_cdf, chi2_pdf, chi2_quantile, f_cdf, f_pdf, f_quantile, kde, l1_distance, uniform_grid, DensityEstimate};
use crate::error::{Error, Result};
use crate::linalg::CovarianceFactor;
use crate::stats;

/// Default number of grid points for [`discrepancy`].
pub const DISCREPANCY_GRID: usize = 512;

/// Upper quantile that fixes the right end of the discrepancy grid.
const GRID_QUANTILE: f64 = 0.995;

/// Minimum number of samples accepted by [`discrepancy`].
pub const MIN_DISCREPANCY_SAMPLES: usize = 50;

/// Theoretical law of a calibration statistic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum Target {
    Chi2 { df: f64 },
    F { d1: f64, d2: f64 },
}

impl Target {
    pub fn pdf(&self, x: f64) -> f64 {
        match *self {
            Target::Chi2 { df } => chi2_pdf(x, df),
            Target::F { d1, d2 } => f_pdf(x, d1, d2),
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            Target::Chi2 { df } => chi2_cdf(x, df),
            Target::F { d1, d2 } => f_cdf(x, d1, d2),
        }
    }

    pub fn quantile(&self, p: f64) -> f64 {
        match *self {
            Target::Chi2 { df } => chi2_quantile(p, df),
            Target::F { d1, d2 } => f_quantile(p, d1, d2),
        }
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Target::Chi2 { df } => write!(f, "chi2({df})"),
            Target::F { d1, d2 } => write!(f, "F({d1},{d2})"),
        }
    }
}

/// Pooled statistic values of one assessment configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatisticSeries {
    pub samples: Vec<f64>,
    pub target: Target,
    pub m: usize,
    /// Solves skipped because of Krylov breakdown or an ill-posed projection.
    pub breakdowns: usize,
    /// Largest relative norm of an error component outside the posterior range.
    pub max_leak: f64,
}

impl StatisticSeries {
    pub fn ks(&self) -> f64 {
        stats::ks_statistic(&self.samples, |x| self.target.cdf(x))
    }

    /// One column CSV with header `statistic`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("statistic\n");
        for x in &self.samples {
            let _ = writeln!(out, "{x:.16e}");
        }
        out
    }
}

/// `(x* − x_m)ᵀ Σ_m† (x* − x_m)`, divided by `rank(Σ_m)` when `normalize`.
pub fn z_statistic(xstar: &DVector<f64>, xm: &DVector<f64>, sigma_m: &CovarianceFactor, normalize: bool) -> Result<f64> {
    let spectrum = sigma_m.spectrum();
    let q = spectrum.quadform(&(xstar - xm))?;
    Ok(if normalize && spectrum.rank() > 0 { q / spectrum.rank() as f64 } else { q })
}

/// Like [`z_statistic`] but projects the error onto `range(Σ_m)` first and
/// returns the relative norm of the discarded component.
pub fn z_statistic_clamped(
    xstar: &DVector<f64>,
    xm: &DVector<f64>,
    sigma_m: &CovarianceFactor,
    normalize: bool,
) -> (f64, f64) {
    let spectrum = sigma_m.spectrum();
    let e = xstar - xm;
    let (q, leak) = spectrum.quadform_clamped(&e);
    let q = if normalize && spectrum.rank() > 0 { q / spectrum.rank() as f64 } else { q };
    let norm = e.norm();
    (q, if norm > 0.0 { leak / norm } else { 0.0 })
}

/// Discrepancy grid: `points` nodes on `[0, max(q̂₀.₉₉₅, target q₀.₉₉₅)]`.
pub fn discrepancy_grid(samples: &[f64], target: &Target, points: usize) -> Vec<f64> {
    let hi = stats::quantile(samples, GRID_QUANTILE).max(target.quantile(GRID_QUANTILE));
    uniform_grid(0.0, hi, points)
}

/// `∫|p̂ − p_target|` with `p̂` the KDE of the samples.
pub fn discrepancy(series: &StatisticSeries, grid_points: usize) -> Result<f64> {
    if series.samples.len() < MIN_DISCREPANCY_SAMPLES {
        return Err(Error::DegenerateSample(format!(
            "discrepancy needs at least {MIN_DISCREPANCY_SAMPLES} samples, got {}",
            series.samples.len()
        )));
    }
    let grid = discrepancy_grid(&series.samples, &series.target, grid_points);
    let empirical = kde(&series.samples, &grid)?;
    let target = DensityEstimate::from_fn(&grid, |x| series.target.pdf(x));
    l1_distance(&empirical, &target)
}
