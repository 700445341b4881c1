//! Projection solves, projectors, Krylov bases, conjugate gradient and
//! structured Gaussian priors.

mod alignment;
mod cg;
mod krylov;
mod pair;
mod posterior;
mod prior;
mod projector;

pub use alignment::{alignment_cdf, alignment_cosine, alignment_density};
pub use cg::{cg, cg_with_tol, CgTrace, CG_TOL};
pub use krylov::{
    arnoldi_basis, krylov_pair, krylov_pair_with, monomial_basis, KrylovBasis, KrylovVariant, BREAKDOWN_TOL,
};
pub use pair::{petrov_galerkin_solve, ProjectionPair, MAX_CORE_COND};
pub use posterior::general_posterior;
pub use prior::{sample_prior_solution, PriorTail, StructuredPrior};
pub use projector::{make_p1, make_p2, make_p2_from_pair, FactoredProjector, DENSIFY_LIMIT};
