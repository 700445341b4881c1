//! Test problems: Matrix Market I/O, the clamped biharmonic operator and the
//! point-source heating problem with its discrete loss.

mod biharmonic;
mod fem;
mod mtx;

pub use biharmonic::biharmonic_matrix;
pub use fem::{
    calibrate_pde, default_r_grid, fem_assemble, fem_rhs, pde_loss, pde_uncertainty_band, point_source_rhs,
    source_positions, BandSpec, FemProblem, LossCurve, DENSE_EXACT_LIMIT, T_TARGET,
};
pub use mtx::{parse_matrix_market, read_matrix_market, to_matrix_market, write_matrix_market};
