use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::projector::FactoredProjector;
use crate::error::{Error, Result};
use crate::linalg::{CovarianceFactor, MatrixHandle};

/// Tolerance of the `WᵀA · tail ≈ 0` check.
const TAIL_TOL: f64 = 1e-8;

/// Covariance contribution outside `range(V)`.
#[derive(Debug, Clone)]
pub enum PriorTail {
    /// `Y G^{1/2}` given explicitly.
    Factor(CovarianceFactor),
    /// `scale · P` for a projector `P` onto `Null(WᵀA)`; sampled as `√scale · P ξ`.
    Projector { projector: FactoredProjector, scale: f64 },
}

impl PriorTail {
    pub fn dim(&self) -> usize {
        match self {
            PriorTail::Factor(f) => f.dim(),
            PriorTail::Projector { projector, .. } => projector.dim(),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> DVector<f64> {
        match self {
            PriorTail::Factor(f) => f.apply(&DVector::from_fn(f.rank(), |_, _| StandardNormal.sample(rng))),
            PriorTail::Projector { projector, scale } => {
                let xi = DVector::from_fn(projector.dim(), |_, _| StandardNormal.sample(rng));
                projector.apply(&xi).expect("dimension fixed at construction") * scale.sqrt()
            }
        }
    }
}

/// Prior `𝒩(x₀, VVᵀ + tail)` whose tail lies in `Null(WᵀA)`.
#[derive(Debug, Clone)]
pub struct StructuredPrior {
    x0: DVector<f64>,
    v: DMatrix<f64>,
    tail: PriorTail,
}

impl StructuredPrior {
    /// Checks dimensions and `‖WᵀA · tail‖ ≤ 1e-8 ‖AᵀW‖ ‖tail‖`.
    pub fn new(x0: DVector<f64>, v: DMatrix<f64>, tail: PriorTail, a: &MatrixHandle, w: &DMatrix<f64>) -> Result<Self> {
        let n = x0.len();
        for found in [v.nrows(), tail.dim(), a.nrows(), w.nrows()] {
            if found != n {
                return Err(Error::DimensionMismatch { expected: n, found });
            }
        }
        let atw = a.apply_transpose_block(w)?;
        let scale = atw.norm();
        let leak = match &tail {
            PriorTail::Factor(f) => {
                let x = f.factor();
                (atw.tr_mul(x).norm(), scale * x.norm())
            }
            PriorTail::Projector { projector, .. } => {
                let probe = DVector::from_fn(n, |i, _| 1.0 + (i % 7) as f64);
                let pz = projector.apply(&probe)?;
                (atw.tr_mul(&pz).norm(), scale * probe.norm())
            }
        };
        if leak.0 > TAIL_TOL * leak.1 {
            return Err(Error::InvalidParameter(format!(
                "prior tail is not in Null(W^T A): residual {:.3e}",
                leak.0
            )));
        }
        Ok(Self { x0, v, tail })
    }

    pub fn x0(&self) -> &DVector<f64> {
        &self.x0
    }

    pub fn v(&self) -> &DMatrix<f64> {
        &self.v
    }

    pub fn tail(&self) -> &PriorTail {
        &self.tail
    }
}

/// `x* = x₀ + V v + tail · y` with independent standard normal `v`, `y`.
pub fn sample_prior_solution<R: Rng + ?Sized>(prior: &StructuredPrior, rng: &mut R) -> DVector<f64> {
    let v = DVector::from_fn(prior.v.ncols(), |_, _| StandardNormal.sample(rng));
    let head = &prior.v * v;
    &prior.x0 + head + prior.tail.sample(rng)
}
