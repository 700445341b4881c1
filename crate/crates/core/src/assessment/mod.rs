//! Ensemble assessment of calibrated uncertainty: random SPD problems, Z-type
//! statistics per prior, and KDE-based discrepancy against the target law.

mod run;
mod statistic;

pub use run::{
    baseline_covariances, run_assessment, AssessmentSpec, PriorMode, Regime, SolutionSampling, BASELINE_LIMIT,
    MAX_BREAKDOWN_FRACTION,
};
pub use statistic::{
    discrepancy, discrepancy_grid, z_statistic, z_statistic_clamped, StatisticSeries, Target, DISCREPANCY_GRID,
    MIN_DISCREPANCY_SAMPLES,
};
