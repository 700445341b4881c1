use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::exec::{map_indexed, Execution};
use crate::stats;

/// Density values tabulated on a sorted grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityEstimate {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
}

impl DensityEstimate {
    /// Tabulates an analytic density.
    pub fn from_fn(grid: &[f64], f: impl Fn(f64) -> f64) -> Self {
        Self { grid: grid.to_vec(), values: grid.iter().map(|&x| f(x)).collect() }
    }

    /// Central Riemann mass `Σ values_i · w_i` (see [`cell_widths`]).
    pub fn mass(&self) -> f64 {
        cell_widths(&self.grid).iter().zip(&self.values).map(|(w, v)| w * v).sum()
    }

    /// Two-column CSV with header `grid,value`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("grid,value\n");
        for (x, v) in self.grid.iter().zip(&self.values) {
            let _ = writeln!(out, "{x:.16e},{v:.16e}");
        }
        out
    }
}

/// Width of the cell centred at each grid node: half the distance between its
/// neighbours, one-sided at the ends.
pub fn cell_widths(grid: &[f64]) -> Vec<f64> {
    let k = grid.len();
    match k {
        0 => vec![],
        1 => vec![0.0],
        _ => (0..k)
            .map(|i| {
                let lo = grid[i.saturating_sub(1)];
                let hi = grid[(i + 1).min(k - 1)];
                (hi - lo) / 2.0
            })
            .collect(),
    }
}

/// `k` equally spaced points covering `[lo, hi]`.
pub fn uniform_grid(lo: f64, hi: f64, k: usize) -> Vec<f64> {
    if k == 1 {
        return vec![(lo + hi) / 2.0];
    }
    (0..k).map(|i| lo + (hi - lo) * i as f64 / (k - 1) as f64).collect()
}

/// Silverman's rule-of-thumb bandwidth `1.06 σ̂ N^{-1/5}`.
pub fn silverman_bandwidth(samples: &[f64]) -> f64 {
    1.06 * stats::std_dev(samples) * (samples.len() as f64).powf(-0.2)
}

/// Gaussian-kernel density estimate with Silverman bandwidth.
pub fn kde(samples: &[f64], grid: &[f64]) -> Result<DensityEstimate> {
    kde_with(samples, grid, Execution::Sequential)
}

pub fn kde_with(samples: &[f64], grid: &[f64], exec: Execution) -> Result<DensityEstimate> {
    if samples.len() < 2 {
        return Err(Error::DegenerateSample(format!("KDE needs at least 2 samples, got {}", samples.len())));
    }
    if samples.iter().any(|x| !x.is_finite()) {
        return Err(Error::DegenerateSample("non-finite sample".into()));
    }
    let h = silverman_bandwidth(samples);
    if !(h > 0.0) {
        return Err(Error::DegenerateSample("all samples are equal".into()));
    }
    let norm = 1.0 / (samples.len() as f64 * h * (2.0 * std::f64::consts::PI).sqrt());
    let values = map_indexed(exec, grid.len(), |i| {
        let x = grid[i];
        samples.iter().map(|s| (-0.5 * ((x - s) / h).powi(2)).exp()).sum::<f64>() * norm
    });
    Ok(DensityEstimate { grid: grid.to_vec(), values })
}

/// `∫|p − q|` by central Riemann sum on the shared grid.
pub fn l1_distance(p: &DensityEstimate, q: &DensityEstimate) -> Result<f64> {
    if p.grid != q.grid || p.values.len() != q.values.len() {
        return Err(Error::GridMismatch);
    }
    Ok(cell_widths(&p.grid)
        .iter()
        .zip(p.values.iter().zip(&q.values))
        .map(|(w, (a, b))| w * (a - b).abs())
        .sum())
}
