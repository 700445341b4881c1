//! Degenerate Gaussian and Student laws, scalar densities, kernel density
//! estimation and the L1 discrepancy.

mod gaussian;
mod kde;
mod scalar;

pub use gaussian::{DegenerateGaussian, DegenerateStudent};
pub use kde::{cell_widths, kde, kde_with, l1_distance, silverman_bandwidth, uniform_grid, DensityEstimate};
pub use scalar::{
    chi2_cdf, chi2_pdf, chi2_quantile, f_cdf, f_pdf, f_quantile, ig_ln_pdf, ig_pdf, ScalePosterior,
};
