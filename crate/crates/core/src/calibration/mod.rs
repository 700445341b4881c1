//! Inverse-gamma scale calibration and CG-gain based error covariances.

mod oracle;
mod reid;
mod scale;

pub use oracle::fit_inverse_gamma_by_quadrature;
pub use reid::{
    gain_sequence, op_norm_a_ainv, reid_covariance, reid_s_statistic, reid_sample, reid_underestimate,
    truncation_error, ReidCovariance, A_ORTHO_TOL,
};
pub use scale::{
    calibrate_by_observation, calibrate_cheap, observation_errors, observation_stream, predictive_student,
    s_statistic_samples, CalibrationResult, ObservationPlan, P1Mode, Statistic, FACTORED_P1_LIMIT,
};
