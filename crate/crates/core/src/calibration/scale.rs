use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;
use rand::Rng;
use rand_distr::{ChiSquared, Distribution};
use serde::{Deserialize, Serialize};

use crate::distributions::{DegenerateStudent, ScalePosterior};
use crate::error::{Error, Result};
use crate::exec::{map_indexed, Execution};
use crate::linalg::{CovarianceFactor, MatrixHandle};
use crate::projection::{cg, make_p1, ProjectionPair};
use crate::rng::{self, StreamRng};

/// Problem size above which [`P1Mode::auto`] switches to the CG trace.
pub const FACTORED_P1_LIMIT: usize = 1000;

/// Quadratic form accumulated per observation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Statistic {
    /// `eᵀe`.
    Z,
    /// `eᵀAe`.
    S,
}

impl fmt::Display for Statistic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Statistic::Z => "Z",
            Statistic::S => "S",
        })
    }
}

impl FromStr for Statistic {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "Z" | "z" => Ok(Statistic::Z),
            "S" | "s" => Ok(Statistic::S),
            _ => Err(Error::InvalidParameter(format!("unknown statistic '{s}'"))),
        }
    }
}

/// How the observation error `e = P₁x*` is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum P1Mode {
    /// Apply the factored oblique projector of the observation's own pair.
    Factored,
    /// Run CG from `x₀ = 0` for `m` steps and take `e = x* − x_m`.
    CgTrace,
}

impl P1Mode {
    pub fn auto(n: usize) -> Self {
        if n <= FACTORED_P1_LIMIT {
            P1Mode::Factored
        } else {
            P1Mode::CgTrace
        }
    }
}

/// Prior and posterior inverse-gamma parameters of a calibration run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult {
    pub alpha: f64,
    pub beta: f64,
    pub alpha_post: f64,
    pub beta_post: f64,
    pub statistic: Statistic,
    /// Number of extra observations; 0 for the residual-based update.
    pub k: usize,
    /// `E[s] = β̃/(α̃ − 1)` when `α̃ > 1`.
    pub point_scale: Option<f64>,
}

impl CalibrationResult {
    fn new(prior: ScalePosterior, posterior: ScalePosterior, statistic: Statistic, k: usize) -> Self {
        Self {
            alpha: prior.alpha,
            beta: prior.beta,
            alpha_post: posterior.alpha,
            beta_post: posterior.beta,
            statistic,
            k,
            point_scale: posterior.mean().ok(),
        }
    }

    pub fn prior(&self) -> ScalePosterior {
        ScalePosterior { alpha: self.alpha, beta: self.beta }
    }

    pub fn posterior(&self) -> ScalePosterior {
        ScalePosterior { alpha: self.alpha_post, beta: self.beta_post }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain struct serializes")
    }
}

/// Residual-based update `α̃ = α + m/2`, `β̃ = β + δᵀδ/2` with
/// `δ = (WᵀAV)⁻¹ Wᵀ (b − Ax₀)`.
pub fn calibrate_cheap(
    a: &MatrixHandle,
    b: &DVector<f64>,
    x0: &DVector<f64>,
    pair: &ProjectionPair,
    prior: ScalePosterior,
) -> Result<CalibrationResult> {
    let delta = pair.coefficients(a, b, x0)?;
    let post = prior.updated(pair.m() as f64 / 2.0, delta.norm_squared() / 2.0);
    Ok(CalibrationResult::new(prior, post, Statistic::Z, 0))
}

/// Settings of the observation-based update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObservationPlan {
    pub m: usize,
    pub k: usize,
    pub statistic: Statistic,
    pub mode: P1Mode,
    /// Observation `i` draws from `rng::stream(seed, &[i])`.
    pub seed: u64,
    pub exec: Execution,
}

/// RNG stream used by observation `i` of [`calibrate_by_observation`].
pub fn observation_stream(seed: u64, i: usize) -> StreamRng {
    rng::stream(seed, &[i as u64])
}

/// Quadratic forms `eᵢᵀeᵢ` or `eᵢᵀAeᵢ` of the `k` observation errors, in order.
pub fn observation_errors<B, S>(a: &MatrixHandle, plan: &ObservationPlan, build: B, sample: S) -> Result<Vec<f64>>
where
    B: Fn(&MatrixHandle, &DVector<f64>, usize) -> Result<ProjectionPair> + Sync + Send,
    S: Fn(&mut StreamRng) -> DVector<f64> + Sync + Send,
{
    let n = a.nrows();
    let one = |i: usize| -> Result<f64> {
        let mut r = observation_stream(plan.seed, i);
        let xstar = sample(&mut r);
        if xstar.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: xstar.len() });
        }
        let b = a.apply(&xstar)?;
        let e = match plan.mode {
            P1Mode::Factored => make_p1(&build(a, &b, plan.m)?).apply(&xstar)?,
            P1Mode::CgTrace => {
                let trace = cg(a, &b, &DVector::zeros(n), plan.m)?;
                &xstar - trace.solution()
            }
        };
        match plan.statistic {
            Statistic::Z => Ok(e.norm_squared()),
            Statistic::S => a.quad_form(&e),
        }
    };
    map_indexed(plan.exec, plan.k, |i| one(i).map_err(|e| Error::Observation { index: i, source: Box::new(e) }))
        .into_iter()
        .collect()
}

/// Observation-based update: `α̃ = α + k(n−m)/2`, `β̃ = β + Σᵢ qᵢ/2` where `qᵢ`
/// is the Z or S quadratic form of `eᵢ = P₁x*ᵢ` for `x*ᵢ ~ sample`, `b = Ax*ᵢ`.
pub fn calibrate_by_observation<B, S>(
    a: &MatrixHandle,
    plan: &ObservationPlan,
    prior: ScalePosterior,
    build: B,
    sample: S,
) -> Result<CalibrationResult>
where
    B: Fn(&MatrixHandle, &DVector<f64>, usize) -> Result<ProjectionPair> + Sync + Send,
    S: Fn(&mut StreamRng) -> DVector<f64> + Sync + Send,
{
    let n = a.nrows();
    if plan.k == 0 {
        return Err(Error::InvalidParameter("observation-based calibration needs k >= 1".into()));
    }
    if plan.m > n {
        return Err(Error::InvalidParameter(format!("m = {} exceeds n = {n}", plan.m)));
    }
    let q = observation_errors(a, plan, build, sample)?;
    let d_alpha = (plan.k * (n - plan.m)) as f64 / 2.0;
    let d_beta = q.iter().sum::<f64>() / 2.0;
    Ok(CalibrationResult::new(prior, prior.updated(d_alpha, d_beta), plan.statistic, plan.k))
}

/// `St_{2α̃}(x̃, (β̃/α̃) Ψ)`.
pub fn predictive_student(xtilde: DVector<f64>, psi: &CovarianceFactor, post: ScalePosterior) -> Result<DegenerateStudent> {
    post.require_proper()?;
    DegenerateStudent::new(xtilde, psi.scaled((post.beta / post.alpha).sqrt()), 2.0 * post.alpha)
}

/// `count` draws of `E[s] χ²_{n−m}`.
pub fn s_statistic_samples<R: Rng + ?Sized>(
    result: &CalibrationResult,
    n_minus_m: usize,
    count: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let es = result.posterior().mean()?;
    if n_minus_m == 0 {
        return Ok(vec![0.0; count]);
    }
    let chi = ChiSquared::new(n_minus_m as f64).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    Ok((0..count).map(|_| es * chi.sample(rng)).collect())
}
