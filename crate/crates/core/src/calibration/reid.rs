use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::CovarianceFactor;
use crate::projection::CgTrace;

/// Largest tolerated deviation of `DᵀAD` from the identity after re-orthogonalization.
pub const A_ORTHO_TOL: f64 = 1e-6;

/// Rank-`d` covariance `Σᵢ gᵢ ṽᵢ ṽᵢᵀ` over CG iterations `m+1..=m+d`.
#[derive(Debug, Clone)]
pub struct ReidCovariance {
    /// A-orthonormal directions, one per column.
    pub directions: DMatrix<f64>,
    /// `A · directions`.
    pub a_directions: DMatrix<f64>,
    pub gains: Vec<f64>,
}

fn check_length(trace: &CgTrace, m: usize, d: usize) -> Result<()> {
    if trace.iterations() < m + d {
        return Err(Error::TraceTooShort { needed: m + d, available: trace.iterations() });
    }
    Ok(())
}

impl ReidCovariance {
    pub fn d(&self) -> usize {
        self.gains.len()
    }

    pub fn dim(&self) -> usize {
        self.directions.nrows()
    }

    /// Factor `[√g₁ ṽ₁, …, √g_d ṽ_d]`.
    pub fn factor(&self) -> CovarianceFactor {
        let mut f = self.directions.clone();
        for (j, g) in self.gains.iter().enumerate() {
            f.column_mut(j).scale_mut(g.sqrt());
        }
        CovarianceFactor::new(f)
    }

    /// `‖DᵀAD − I‖_max`.
    pub fn a_orthonormality_defect(&self) -> f64 {
        let g = self.directions.tr_mul(&self.a_directions);
        (g - DMatrix::identity(self.d(), self.d())).abs().max()
    }
}

/// Builds the covariance from CG directions `m+1..=m+d`, re-A-orthogonalizing
/// them (two Gram-Schmidt passes in the A inner product using the stored `Av`).
pub fn reid_covariance(trace: &CgTrace, m: usize, d: usize) -> Result<ReidCovariance> {
    check_length(trace, m, d)?;
    let n = trace.iterate(0).len();
    let mut q = DMatrix::zeros(n, d);
    let mut aq = DMatrix::zeros(n, d);
    for j in 0..d {
        let mut u = trace.normalized_direction(m + j + 1);
        let mut au = trace.normalized_a_direction(m + j + 1);
        for _ in 0..2 {
            for i in 0..j {
                let c = u.dot(&aq.column(i));
                u.axpy(-c, &q.column(i), 1.0);
                au.axpy(-c, &aq.column(i), 1.0);
            }
        }
        let norm = u.dot(&au);
        if !(norm > 0.0) {
            return Err(Error::NotSpd { iteration: m + j + 1, curvature: norm });
        }
        let s = norm.sqrt();
        q.set_column(j, &(u / s));
        aq.set_column(j, &(au / s));
    }
    let rc = ReidCovariance { directions: q, a_directions: aq, gains: trace.gains()[m..m + d].to_vec() };
    let defect = rc.a_orthonormality_defect();
    if defect > A_ORTHO_TOL {
        log::warn!("CG directions remain A-orthonormal only to {defect:.3e}");
    }
    Ok(rc)
}

/// `δ = Σᵢ √gᵢ ṽᵢ ξᵢ`.
pub fn reid_sample<R: Rng + ?Sized>(rc: &ReidCovariance, rng: &mut R) -> DVector<f64> {
    let xi = DVector::from_fn(rc.d(), |j, _| {
        let z: f64 = StandardNormal.sample(rng);
        rc.gains[j].sqrt() * z
    });
    &rc.directions * xi
}

/// `δᵀAδ` for `δ ~ 𝒩(0, Σ_m)`; returns the sample together with the statistic.
pub fn reid_s_statistic<R: Rng + ?Sized>(rc: &ReidCovariance, rng: &mut R) -> (DVector<f64>, f64) {
    let xi = DVector::from_fn(rc.d(), |j, _| {
        let z: f64 = StandardNormal.sample(rng);
        rc.gains[j].sqrt() * z
    });
    let delta = &rc.directions * &xi;
    let s = delta.dot(&(&rc.a_directions * xi));
    (delta, s)
}

/// `Σ_{i=m+1}^{m+d} γᵢ ‖rᵢ₋₁‖²`, a lower bound for `‖x* − x_m‖²_A`.
pub fn reid_underestimate(trace: &CgTrace, m: usize, d: usize) -> Result<f64> {
    check_length(trace, m, d)?;
    Ok(trace.gains()[m..m + d].iter().sum())
}

/// Per-iteration gains `γᵢ ‖rᵢ₋₁‖²`.
pub fn gain_sequence(trace: &CgTrace) -> Vec<f64> {
    trace.gains()
}

/// `‖B‖_{A,A⁻¹}` of `B = Σ dᵢ ṽᵢ ṽᵢᵀ` with A-orthonormal `ṽᵢ`: the largest `|dᵢ|`.
pub fn op_norm_a_ainv(d: &[f64]) -> f64 {
    d.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

/// Error of the best rank-`r` truncation in the same norm: the `(r+1)`-th
/// largest `|dᵢ|`, or 0 when `r ≥ len`.
pub fn truncation_error(d: &[f64], r: usize) -> f64 {
    let mut sorted: Vec<f64> = d.iter().map(|x| x.abs()).collect();
    sorted.sort_by(|a, b| b.total_cmp(a));
    sorted.get(r).copied().unwrap_or(0.0)
}
