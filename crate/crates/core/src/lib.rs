//! Probabilistic projection methods for linear systems `A x = b`.
//!
//! A projection method with search space `range(V)` and constraint space
//! `range(W)` returns `x̃ = x₀ + V (WᵀAV)⁻¹ Wᵀ (b − A x₀)`. Viewing the solution
//! as a Gaussian random variable with prior covariance `VVᵀ + Y G Yᵀ`, where
//! `range(Y) = Null(WᵀA)`, the posterior mean is exactly `x̃` and the posterior
//! covariance is `Y G Yᵀ`. This crate builds those posteriors from factored
//! projectors, calibrates their scale with inverse-gamma conjugacy, and
//! measures how well the resulting uncertainty matches the actual error.
//!
//! Modules:
//! - [`linalg`]: matrices, bases, covariance factors, random SPD ensembles.
//! - [`distributions`]: degenerate Gaussian/Student laws, scalar densities, KDE.
//! - [`projection`]: projection solves, Gaussian conditioning, projectors, Krylov, CG.
//! - [`calibration`]: scale calibration, predictive Student, CG-gain covariances.
//! - [`assessment`]: ensemble calibration assessment and discrepancy metrics.
//! - [`problems`]: Matrix Market I/O, biharmonic and FEM test problems.

pub mod assessment;
pub mod calibration;
pub mod distributions;
pub mod error;
pub mod exec;
pub mod linalg;
pub mod problems;
pub mod projection;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
pub use exec::Execution;
