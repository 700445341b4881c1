use std::fmt::Write as _;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::linalg::MatrixHandle;

/// Relative residual at which [`cg`] stops early.
pub const CG_TOL: f64 = 1e-12;

/// Everything produced by a conjugate gradient run.
///
/// Index `i` of the per-iteration vectors refers to iteration `i + 1`;
/// `residuals[0]` and `iterates[0]` hold `r₀` and `x₀`.
#[derive(Debug, Clone)]
pub struct CgTrace {
    pub iterates: Vec<DVector<f64>>,
    pub residuals: Vec<DVector<f64>>,
    pub directions: Vec<DVector<f64>>,
    /// `A vᵢ`, kept for A-inner products without further matvecs.
    pub a_directions: Vec<DVector<f64>>,
    pub gammas: Vec<f64>,
    /// `ηᵢ = vᵢᵀ A vᵢ`.
    pub etas: Vec<f64>,
    pub deltas: Vec<f64>,
    pub converged: bool,
}

impl CgTrace {
    /// Number of completed iterations.
    pub fn iterations(&self) -> usize {
        self.gammas.len()
    }

    /// `x_i` for `0 ≤ i ≤ iterations()`.
    pub fn iterate(&self, i: usize) -> &DVector<f64> {
        &self.iterates[i]
    }

    pub fn solution(&self) -> &DVector<f64> {
        self.iterates.last().expect("trace always holds x0")
    }

    pub fn residual_norm(&self, i: usize) -> f64 {
        self.residuals[i].norm()
    }

    /// `gᵢ = γᵢ ‖rᵢ₋₁‖²` for iterations `1..=iterations()`.
    pub fn gains(&self) -> Vec<f64> {
        (0..self.iterations()).map(|i| self.gammas[i] * self.residuals[i].norm_squared()).collect()
    }

    /// A-normalized direction `ṽᵢ = vᵢ/√ηᵢ` for iteration `i ≥ 1`.
    pub fn normalized_direction(&self, i: usize) -> DVector<f64> {
        &self.directions[i - 1] / self.etas[i - 1].sqrt()
    }

    /// `A ṽᵢ`.
    pub fn normalized_a_direction(&self, i: usize) -> DVector<f64> {
        &self.a_directions[i - 1] / self.etas[i - 1].sqrt()
    }

    /// CSV with header `iteration,residual_norm,gamma,gain`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("iteration,residual_norm,gamma,gain\n");
        for (i, g) in self.gains().iter().enumerate() {
            let _ = writeln!(out, "{},{:.16e},{:.16e},{:.16e}", i + 1, self.residual_norm(i + 1), self.gammas[i], g);
        }
        out
    }
}

/// Conjugate gradient for SPD `A`, at most `max_iter` iterations, stopping
/// once `‖rᵢ‖ ≤ 1e-12 ‖r₀‖`.
pub fn cg(a: &MatrixHandle, b: &DVector<f64>, x0: &DVector<f64>, max_iter: usize) -> Result<CgTrace> {
    cg_with_tol(a, b, x0, max_iter, CG_TOL)
}

pub fn cg_with_tol(
    a: &MatrixHandle,
    b: &DVector<f64>,
    x0: &DVector<f64>,
    max_iter: usize,
    tol: f64,
) -> Result<CgTrace> {
    let n = a.nrows();
    if b.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: b.len() });
    }
    if x0.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: x0.len() });
    }
    let mut x = x0.clone();
    let mut r = b - a.apply(x0)?;
    let r0_norm = r.norm();
    let mut trace = CgTrace {
        iterates: vec![x.clone()],
        residuals: vec![r.clone()],
        directions: vec![],
        a_directions: vec![],
        gammas: vec![],
        etas: vec![],
        deltas: vec![],
        converged: r0_norm == 0.0,
    };
    if trace.converged {
        return Ok(trace);
    }
    let mut v = r.clone();
    let mut rr = r.norm_squared();
    for i in 1..=max_iter {
        let av = a.apply(&v)?;
        let eta = v.dot(&av);
        if !(eta > 0.0) {
            return Err(Error::NotSpd { iteration: i, curvature: eta });
        }
        let gamma = rr / eta;
        x.axpy(gamma, &v, 1.0);
        r.axpy(-gamma, &av, 1.0);
        let rr_next = r.norm_squared();
        let delta = rr_next / rr;
        trace.iterates.push(x.clone());
        trace.residuals.push(r.clone());
        trace.directions.push(v.clone());
        trace.a_directions.push(av);
        trace.gammas.push(gamma);
        trace.etas.push(eta);
        trace.deltas.push(delta);
        if rr_next.sqrt() <= tol * r0_norm {
            trace.converged = true;
            break;
        }
        v = &r + &v * delta;
        rr = rr_next;
    }
    Ok(trace)
}
