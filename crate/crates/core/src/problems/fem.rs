use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt::Write as _;
use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector, LU};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::calibration::{calibrate_by_observation, CalibrationResult, ObservationPlan, P1Mode, Statistic};
use crate::distributions::ScalePosterior;
use crate::error::{Error, Result};
use crate::exec::{map_indexed, Execution};
use crate::linalg::{CsrMatrix, MatrixHandle};
use crate::projection::{krylov_pair, make_p2_from_pair, petrov_galerkin_solve, KrylovVariant};
use crate::{rng, stats};

/// Target temperature of the heating problem.
pub const T_TARGET: f64 = 0.5;

/// Largest system solved by dense LU for reference solutions; CG above.
pub const DENSE_EXACT_LIMIT: usize = 5000;

const EXACT_CG_TOL: f64 = 1e-12;

/// Q1 finite elements for `−ΔT = Σᵢ δ(x − xᵢ)` on `[0,1]²` with `T = 0` on the
/// boundary, `h = 2^{−L}`, unknowns at interior nodes ordered with `x` fastest.
#[derive(Debug)]
pub struct FemProblem {
    pub levels: u32,
    pub a: MatrixHandle,
    pub t_target: f64,
    exact: OnceLock<ExactSolver>,
}

#[derive(Debug)]
enum ExactSolver {
    Lu(LU<f64, nalgebra::Dyn, nalgebra::Dyn>),
    Cg,
}

impl FemProblem {
    /// Nodes per dimension, `2^L − 1`.
    pub fn nx(&self) -> usize {
        (1usize << self.levels) - 1
    }

    pub fn n(&self) -> usize {
        self.nx() * self.nx()
    }

    pub fn h(&self) -> f64 {
        1.0 / (1u64 << self.levels) as f64
    }

    /// Reference solve: dense LU (factored once) up to [`DENSE_EXACT_LIMIT`],
    /// CG to a relative residual of 1e-12 above.
    pub fn solve_exact(&self, b: &DVector<f64>) -> Result<DVector<f64>> {
        let solver = self.exact.get_or_init(|| {
            if self.n() <= DENSE_EXACT_LIMIT {
                ExactSolver::Lu(self.a.to_dense().lu())
            } else {
                ExactSolver::Cg
            }
        });
        match solver {
            ExactSolver::Lu(lu) => lu.solve(b).ok_or_else(|| Error::InvalidMatrix("singular FEM matrix".into())),
            ExactSolver::Cg => plain_cg(&self.a, b, EXACT_CG_TOL, 20 * self.n()),
        }
    }
}

/// CG without a stored trace, for large reference solves.
fn plain_cg(a: &MatrixHandle, b: &DVector<f64>, tol: f64, max_iter: usize) -> Result<DVector<f64>> {
    let mut x = DVector::zeros(b.len());
    let mut r = b.clone();
    let mut p = r.clone();
    let mut rr = r.norm_squared();
    let stop = tol * b.norm();
    for it in 1..=max_iter {
        if rr.sqrt() <= stop {
            return Ok(x);
        }
        let ap = a.apply(&p)?;
        let curv = p.dot(&ap);
        if !(curv > 0.0) {
            return Err(Error::NotSpd { iteration: it, curvature: curv });
        }
        let gamma = rr / curv;
        x.axpy(gamma, &p, 1.0);
        r.axpy(-gamma, &ap, 1.0);
        let rr_new = r.norm_squared();
        p = &r + &p * (rr_new / rr);
        rr = rr_new;
    }
    log::warn!("reference CG stopped after {max_iter} iterations at residual {:.3e}", rr.sqrt());
    Ok(x)
}

/// 1D stiffness `(1/h) tridiag(−1, 2, −1)` and mass `(h/6) tridiag(1, 4, 1)`
/// of the interior tents.
fn one_dim(nx: usize, h: f64) -> (DMatrix<f64>, DMatrix<f64>) {
    let k = DMatrix::from_fn(nx, nx, |i, j| match i.abs_diff(j) {
        0 => 2.0 / h,
        1 => -1.0 / h,
        _ => 0.0,
    });
    let m = DMatrix::from_fn(nx, nx, |i, j| match i.abs_diff(j) {
        0 => 4.0 * h / 6.0,
        1 => h / 6.0,
        _ => 0.0,
    });
    (k, m)
}

/// `A = K⊗M + M⊗K` in CSR, integrals in closed form.
pub fn fem_assemble(levels: u32) -> Result<FemProblem> {
    if !(2..=10).contains(&levels) {
        return Err(Error::InvalidParameter(format!("FEM level must be in 2..=10, got {levels}")));
    }
    let nx = (1usize << levels) - 1;
    let h = 1.0 / (1u64 << levels) as f64;
    let (k, m) = one_dim(nx, h);
    let mut triplets = Vec::with_capacity(9 * nx * nx);
    for j in 0..nx {
        for i in 0..nx {
            let row = j * nx + i;
            for jj in j.saturating_sub(1)..(j + 2).min(nx) {
                for ii in i.saturating_sub(1)..(i + 2).min(nx) {
                    let v = k[(i, ii)] * m[(j, jj)] + m[(i, ii)] * k[(j, jj)];
                    triplets.push((row, jj * nx + ii, v));
                }
            }
        }
    }
    let a = MatrixHandle::Csr(CsrMatrix::from_triplets(nx * nx, nx * nx, &triplets)?);
    Ok(FemProblem { levels, a, t_target: T_TARGET, exact: OnceLock::new() })
}

/// Four sources at the vertices `(±r/√2, ±r/√2)` of a square centred at `(½, ½)`.
pub fn source_positions(r: f64) -> [(f64, f64); 4] {
    let d = r * FRAC_1_SQRT_2;
    [(0.5 + d, 0.5 + d), (0.5 - d, 0.5 + d), (0.5 - d, 0.5 - d), (0.5 + d, 0.5 - d)]
}

/// Load vector of unit point sources at `points`: `b_{ij} = Σ φᵢ(x_s) φⱼ(y_s)`.
pub fn point_source_rhs(problem: &FemProblem, points: &[(f64, f64)]) -> Result<DVector<f64>> {
    let nx = problem.nx();
    let h = problem.h();
    let mut b = DVector::zeros(nx * nx);
    for &(x, y) in points {
        if !(x > 0.0 && x < 1.0 && y > 0.0 && y < 1.0) {
            return Err(Error::InvalidParameter(format!("source ({x}, {y}) outside the open unit square")));
        }
        let tents = |t: f64| {
            let c = (t / h).floor() as i64;
            (c..=c + 1)
                .filter(|&k| k >= 1 && k as usize <= nx)
                .map(move |k| (k as usize - 1, (1.0 - (t / h - k as f64).abs()).max(0.0)))
        };
        for (i, wx) in tents(x) {
            for (j, wy) in tents(y) {
                b[j * nx + i] += wx * wy;
            }
        }
    }
    Ok(b)
}

pub fn fem_rhs(problem: &FemProblem, r: f64) -> Result<DVector<f64>> {
    if !(r > 0.0 && r < FRAC_1_SQRT_2) {
        return Err(Error::InvalidParameter(format!("source radius must be in (0, 1/sqrt 2), got {r}")));
    }
    point_source_rhs(problem, &source_positions(r))
}

/// `𝓛 = mean_{ij} (T_{ij} − T_target)²`.
pub fn pde_loss(t: &DVector<f64>, t_target: f64) -> f64 {
    t.iter().map(|v| (v - t_target).powi(2)).sum::<f64>() / t.len() as f64
}

/// 64 uniform radii on `[0.05, 0.65]`.
pub fn default_r_grid() -> Vec<f64> {
    crate::distributions::uniform_grid(0.05, 0.65, 64)
}

/// Exact loss and posterior loss band over the radii.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossCurve {
    pub r_grid: Vec<f64>,
    pub exact: Vec<f64>,
    pub mean: Vec<f64>,
    pub sd: Vec<f64>,
    pub m: usize,
}

impl LossCurve {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("r,exact,mean,sd\n");
        for i in 0..self.r_grid.len() {
            let _ = writeln!(out, "{:.16e},{:.16e},{:.16e},{:.16e}", self.r_grid[i], self.exact[i], self.mean[i], self.sd[i]);
        }
        out
    }

    /// `Σ_r |μ(r) − exact(r)| Δr` by the trapezoidal rule.
    pub fn mean_abs_gap(&self) -> f64 {
        let g: Vec<f64> = self.mean.iter().zip(&self.exact).map(|(a, b)| (a - b).abs()).collect();
        let mut acc = 0.0;
        for i in 1..g.len() {
            acc += 0.5 * (g[i] + g[i - 1]) * (self.r_grid[i] - self.r_grid[i - 1]);
        }
        acc
    }
}

/// Observation-based scale for the fixed FEM matrix: `k` draws `x* ~ 𝒩(0, I)`,
/// `W = V = K_m(A, b)`, statistic Z.
pub fn calibrate_pde(problem: &FemProblem, m: usize, k: usize, seed: u64, exec: Execution) -> Result<CalibrationResult> {
    let n = problem.n();
    let plan = ObservationPlan { m, k, statistic: Statistic::Z, mode: P1Mode::auto(n), seed, exec };
    calibrate_by_observation(
        &problem.a,
        &plan,
        ScalePosterior::improper(),
        |a, b, m| krylov_pair(a, b, m, KrylovVariant::CgLike),
        |r| DVector::from_fn(n, |_, _| StandardNormal.sample(r)),
    )
}

/// Band settings; `scale` is the plug-in `E[s]` of a one-off calibration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandSpec {
    pub m: usize,
    pub samples: usize,
    pub scale: f64,
    /// Radius `i` samples from `rng::stream(seed, &[i])`.
    pub seed: u64,
    pub exec: Execution,
}

/// For each radius: `x̃` from `W = V = K_m(A, b(r))`, posterior samples
/// `x̃ + √s P₂ξ`, their losses summarized by mean and sample standard deviation.
pub fn pde_uncertainty_band(problem: &FemProblem, r_grid: &[f64], spec: &BandSpec) -> Result<LossCurve> {
    let n = problem.n();
    if spec.m == 0 || spec.m > n {
        return Err(Error::InvalidParameter(format!("need 1 <= m <= n = {n}, got {}", spec.m)));
    }
    if spec.samples < 2 {
        return Err(Error::InvalidParameter("band needs at least 2 samples".into()));
    }
    if !(spec.scale >= 0.0) || !spec.scale.is_finite() {
        return Err(Error::InvalidParameter(format!("scale must be finite and >= 0, got {}", spec.scale)));
    }
    let tt = problem.t_target;
    let one = |i: usize| -> Result<(f64, f64, f64)> {
        let b = fem_rhs(problem, r_grid[i])?;
        let exact = pde_loss(&problem.solve_exact(&b)?, tt);
        if spec.m == n {
            return Ok((exact, exact, 0.0));
        }
        let pair = krylov_pair(&problem.a, &b, spec.m, KrylovVariant::CgLike)?;
        let xt = petrov_galerkin_solve(&problem.a, &b, &DVector::zeros(n), &pair)?;
        let p2 = make_p2_from_pair(&pair)?;
        let mut r = rng::stream(spec.seed, &[i as u64]);
        let sqrt_s = spec.scale.sqrt();
        let losses = (0..spec.samples)
            .map(|_| {
                let xi = DVector::from_fn(n, |_, _| StandardNormal.sample(&mut r));
                Ok(pde_loss(&(&xt + p2.apply(&xi)? * sqrt_s), tt))
            })
            .collect::<Result<Vec<f64>>>()?;
        Ok((exact, stats::mean(&losses), stats::std_dev(&losses)))
    };
    let rows = map_indexed(spec.exec, r_grid.len(), one).into_iter().collect::<Result<Vec<_>>>()?;
    Ok(LossCurve {
        r_grid: r_grid.to_vec(),
        exact: rows.iter().map(|r| r.0).collect(),
        mean: rows.iter().map(|r| r.1).collect(),
        sd: rows.iter().map(|r| r.2).collect(),
        m: spec.m,
    })
}
