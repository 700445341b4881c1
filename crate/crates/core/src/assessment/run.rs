use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::statistic::{z_statistic_clamped, StatisticSeries, Target};
use crate::calibration::{calibrate_by_observation, calibrate_cheap, ObservationPlan, P1Mode, Statistic};
use crate::distributions::ScalePosterior;
use crate::error::{Error, Result};
use crate::exec::{map_indexed, Execution};
use crate::linalg::{dense_inverse, random_spd, CovarianceFactor, MatrixHandle, SpdEnsembleSpec};
use crate::projection::{
    general_posterior, krylov_pair, make_p2_from_pair, petrov_galerkin_solve, FactoredProjector, KrylovVariant,
    ProjectionPair,
};
use crate::rng::{self, StreamRng};

/// Largest `n` for which the dense baseline priors are formed.
pub const BASELINE_LIMIT: usize = 512;

/// Fraction of skipped solves above which an assessment is aborted.
pub const MAX_BREAKDOWN_FRACTION: f64 = 0.1;

/// Leak above which a clamped statistic is reported in the log.
const LEAK_LOG_TOL: f64 = 1e-8;

/// Prior covariance used to turn a solve into a posterior.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PriorMode {
    /// `Σ₀ = VVᵀ`; the posterior covariance vanishes.
    Trivial,
    /// `Σ₀ = A⁻¹` conditioned on `S = V`.
    AInverse,
    /// `Σ₀ = (AᵀA)⁻¹` conditioned on `S = AV`.
    AtaInverse,
    /// `Σ₀ = s(VVᵀ + P₂)` with the residual-based scale update.
    Cheap,
    /// `Σ₀ = VVᵀ + sP₂` with the observation-based scale update.
    Expensive,
}

impl PriorMode {
    pub const ALL: [PriorMode; 5] =
        [PriorMode::Trivial, PriorMode::AInverse, PriorMode::AtaInverse, PriorMode::Cheap, PriorMode::Expensive];

    pub fn as_str(self) -> &'static str {
        match self {
            PriorMode::Trivial => "trivial",
            PriorMode::AInverse => "a_inverse",
            PriorMode::AtaInverse => "ata_inverse",
            PriorMode::Cheap => "cheap",
            PriorMode::Expensive => "expensive",
        }
    }

    /// Whether the mode has a scale to marginalize.
    pub fn supports_hierarchical(self) -> bool {
        matches!(self, PriorMode::Cheap | PriorMode::Expensive)
    }
}

impl fmt::Display for PriorMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PriorMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PriorMode::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown prior mode '{s}'")))
    }
}

/// Point estimation plugs in `E[s]`; hierarchical marginalizes `s`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Point,
    Hierarchical,
}

impl Regime {
    pub const ALL: [Regime; 2] = [Regime::Point, Regime::Hierarchical];

    pub fn as_str(self) -> &'static str {
        match self {
            Regime::Point => "point",
            Regime::Hierarchical => "hierarchical",
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Regime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Regime::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown regime '{s}'")))
    }
}

/// Where exact solutions come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolutionSampling {
    /// `x* ~ 𝒩(0, I)` with a Krylov pair built from `b = Ax*`.
    StandardNormal,
    /// `x*` drawn from the structured prior itself, with a per-matrix Krylov
    /// pair started from a random seed vector independent of `x*`. The point
    /// regime then uses the true scale.
    PriorConsistent,
}

/// One assessment configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssessmentSpec {
    pub n: usize,
    pub m: usize,
    /// Mean eigenvalue of the random SPD ensemble.
    pub eig_scale: f64,
    /// Number of matrices `M`.
    pub matrices: usize,
    /// Solutions per matrix `N`.
    pub samples: usize,
    pub variant: KrylovVariant,
    pub prior_mode: PriorMode,
    pub regime: Regime,
    /// Observations for the expensive update.
    pub k: usize,
    pub sampling: SolutionSampling,
    /// Scale of the tail used by prior-consistent sampling.
    pub true_scale: f64,
    pub prior: ScalePosterior,
    pub master_seed: u64,
    pub exec: Execution,
}

impl AssessmentSpec {
    /// Desk-scale defaults: `n = 100`, `s̃ = 10`, `M = 50`, `N = 5`, `k = 1`.
    pub fn new(m: usize, variant: KrylovVariant, prior_mode: PriorMode, regime: Regime) -> Self {
        Self {
            n: 100,
            m,
            eig_scale: 10.0,
            matrices: 50,
            samples: 5,
            variant,
            prior_mode,
            regime,
            k: 1,
            sampling: SolutionSampling::StandardNormal,
            true_scale: 1.0,
            prior: ScalePosterior::improper(),
            master_seed: 0,
            exec: Execution::Parallel,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        SpdEnsembleSpec { n: self.n, scale: self.eig_scale, seed: 0 }.validate()?;
        if self.m == 0 || self.m > self.n {
            return bad(format!("need 1 <= m <= n, got m = {} and n = {}", self.m, self.n));
        }
        if self.matrices == 0 || self.samples == 0 {
            return bad("M and N must be >= 1".into());
        }
        if self.prior_mode == PriorMode::Expensive && self.k == 0 {
            return bad("expensive calibration needs k >= 1".into());
        }
        if matches!(self.prior_mode, PriorMode::AInverse | PriorMode::AtaInverse) && self.n > BASELINE_LIMIT {
            return bad(format!("dense baseline priors need n <= {BASELINE_LIMIT}"));
        }
        if self.regime == Regime::Hierarchical && !self.prior_mode.supports_hierarchical() {
            return bad(format!("prior mode {} has no hierarchical regime", self.prior_mode));
        }
        if self.sampling == SolutionSampling::PriorConsistent {
            if !self.prior_mode.supports_hierarchical() {
                return bad(format!("prior-consistent sampling is not defined for {}", self.prior_mode));
            }
            if !(self.true_scale > 0.0) {
                return bad(format!("true scale must be > 0, got {}", self.true_scale));
            }
        }
        ScalePosterior::new(self.prior.alpha, self.prior.beta)?;
        Ok(())
    }

    /// `χ²_{n−m}` for point estimation; `F(n−m, 2α̃)` for hierarchical modelling.
    pub fn target(&self) -> Result<Target> {
        let df = (self.n - self.m) as f64;
        match self.regime {
            Regime::Point => Ok(Target::Chi2 { df }),
            Regime::Hierarchical => {
                let d2 = match self.prior_mode {
                    PriorMode::Cheap => 2.0 * self.prior.alpha + self.m as f64,
                    PriorMode::Expensive => 2.0 * self.prior.alpha + (self.k * (self.n - self.m)) as f64,
                    other => return Err(Error::InvalidParameter(format!("prior mode {other} has no hierarchical regime"))),
                };
                Ok(Target::F { d1: df, d2 })
            }
        }
    }
}

fn randn(n: usize, r: &mut StreamRng) -> DVector<f64> {
    DVector::from_fn(n, |_, _| StandardNormal.sample(r))
}

fn is_breakdown(e: &Error) -> bool {
    match e {
        Error::BreakdownAt(_) | Error::IllPosedProjection { .. } | Error::RankDeficient { .. } => true,
        Error::Observation { source, .. } => is_breakdown(source),
        _ => false,
    }
}

struct MatrixOutcome {
    stats: Vec<f64>,
    breakdowns: usize,
    max_leak: f64,
}

impl MatrixOutcome {
    fn all_broken(samples: usize) -> Self {
        Self { stats: vec![], breakdowns: samples, max_leak: 0.0 }
    }
}

/// Per-matrix state shared by its solves.
struct MatrixContext<'a> {
    spec: &'a AssessmentSpec,
    a: MatrixHandle,
    baseline: Option<CovarianceFactor>,
    scale_post: Option<ScalePosterior>,
}

impl MatrixContext<'_> {
    /// Statistic and relative leak of one solve.
    fn statistic(&self, pair: &ProjectionPair, p2: Option<&FactoredProjector>, b: &DVector<f64>, xstar: &DVector<f64>) -> Result<(f64, f64)> {
        let spec = self.spec;
        let n = spec.n;
        let x0 = DVector::zeros(n);
        match spec.prior_mode {
            PriorMode::Trivial => {
                let xt = petrov_galerkin_solve(&self.a, b, &x0, pair)?;
                let leak = if (xstar - &xt).norm() > 0.0 { 1.0 } else { 0.0 };
                Ok((0.0, leak))
            }
            PriorMode::AInverse | PriorMode::AtaInverse => {
                let s = match spec.prior_mode {
                    PriorMode::AInverse => pair.v().clone(),
                    _ => self.a.apply_block(pair.v())?,
                };
                let sigma0 = self.baseline.as_ref().expect("baseline factor built for baseline modes");
                let (xm, sigma_m) = general_posterior(sigma0, &self.a, &s, b, &x0)?;
                Ok(z_statistic_clamped(xstar, &xm, &sigma_m, false))
            }
            PriorMode::Cheap | PriorMode::Expensive => {
                let owned;
                let p2 = match p2 {
                    Some(p) => p,
                    None => {
                        owned = make_p2_from_pair(pair)?;
                        &owned
                    }
                };
                let xt = petrov_galerkin_solve(&self.a, b, &x0, pair)?;
                let e = xstar - xt;
                let pe = p2.apply(&e)?;
                let norm = e.norm();
                let leak = if norm > 0.0 { (&e - &pe).norm() / norm } else { 0.0 };
                let q = pe.norm_squared();
                let post = match spec.prior_mode {
                    PriorMode::Cheap => calibrate_cheap(&self.a, b, &x0, pair, spec.prior)?.posterior(),
                    _ => self.scale_post.expect("expensive calibration done per matrix"),
                };
                let z = match (spec.regime, spec.sampling) {
                    (Regime::Point, SolutionSampling::PriorConsistent) => q / spec.true_scale,
                    (Regime::Point, SolutionSampling::StandardNormal) => q / post.mean()?,
                    (Regime::Hierarchical, _) => {
                        post.require_proper()?;
                        q * post.alpha / (post.beta * (n - spec.m) as f64)
                    }
                };
                Ok((z, leak))
            }
        }
    }
}

fn baseline_factor(spec: &AssessmentSpec, a: &MatrixHandle) -> Result<Option<CovarianceFactor>> {
    Ok(match spec.prior_mode {
        PriorMode::AInverse => Some(CovarianceFactor::from_psd(&dense_inverse(&a.to_dense())?)?),
        // X = A⁻¹ gives X Xᵀ = A⁻¹A⁻ᵀ = (AᵀA)⁻¹
        PriorMode::AtaInverse => Some(CovarianceFactor::new(dense_inverse(&a.to_dense())?)),
        _ => None,
    })
}

fn assess_matrix(spec: &AssessmentSpec, i: usize) -> Result<MatrixOutcome> {
    let n = spec.n;
    let seed = spec.master_seed;
    let ens = SpdEnsembleSpec { n, scale: spec.eig_scale, seed: rng::derive_seed(seed, &[i as u64, 0]) };
    let a = random_spd(&ens, &mut rng::stream(ens.seed, &[]))?;
    if spec.m == n {
        // exact solve: every error is zero
        return Ok(MatrixOutcome { stats: vec![0.0; spec.samples], breakdowns: 0, max_leak: 0.0 });
    }
    let variant = spec.variant;
    let build = move |a: &MatrixHandle, b: &DVector<f64>, m: usize| krylov_pair(a, b, m, variant);
    let plan = ObservationPlan {
        m: spec.m,
        k: spec.k,
        statistic: Statistic::Z,
        mode: P1Mode::auto(n),
        seed: rng::derive_seed(seed, &[i as u64, 2]),
        exec: Execution::Sequential,
    };
    let baseline = baseline_factor(spec, &a)?;
    let mut out = MatrixOutcome { stats: Vec::with_capacity(spec.samples), breakdowns: 0, max_leak: 0.0 };

    match spec.sampling {
        SolutionSampling::StandardNormal => {
            let scale_post = if spec.prior_mode == PriorMode::Expensive {
                match calibrate_by_observation(&a, &plan, spec.prior, build, |r| randn(n, r)) {
                    Ok(c) => Some(c.posterior()),
                    Err(e) if is_breakdown(&e) => return Ok(MatrixOutcome::all_broken(spec.samples)),
                    Err(e) => return Err(e),
                }
            } else {
                None
            };
            let ctx = MatrixContext { spec, a, baseline, scale_post };
            for j in 0..spec.samples {
                let mut r = rng::stream(seed, &[i as u64, 1, j as u64]);
                let xstar = randn(n, &mut r);
                let b = ctx.a.apply(&xstar)?;
                let pair = match build(&ctx.a, &b, spec.m) {
                    Ok(p) => p,
                    Err(e) if is_breakdown(&e) => {
                        out.breakdowns += 1;
                        continue;
                    }
                    Err(e) => return Err(e),
                };
                let (z, leak) = ctx.statistic(&pair, None, &b, &xstar)?;
                out.stats.push(z);
                out.max_leak = out.max_leak.max(leak);
            }
        }
        SolutionSampling::PriorConsistent => {
            let rho = randn(n, &mut rng::stream(seed, &[i as u64, 3]));
            let pair = match build(&a, &rho, spec.m).and_then(|p| make_p2_from_pair(&p).map(|p2| (p, p2))) {
                Ok(p) => p,
                Err(e) if is_breakdown(&e) => return Ok(MatrixOutcome::all_broken(spec.samples)),
                Err(e) => return Err(e),
            };
            let (pair, p2) = pair;
            let s = spec.true_scale;
            let mode = spec.prior_mode;
            let sample = |r: &mut StreamRng| -> DVector<f64> {
                let head = pair.v() * randn(spec.m, r);
                let tail = p2.apply(&randn(n, r)).expect("dimension fixed") * s.sqrt();
                match mode {
                    PriorMode::Cheap => (head + tail / s.sqrt()) * s.sqrt(),
                    _ => head + tail,
                }
            };
            let scale_post = if mode == PriorMode::Expensive {
                let fixed = |_: &MatrixHandle, _: &DVector<f64>, _: usize| Ok(pair.clone());
                Some(calibrate_by_observation(&a, &plan, spec.prior, fixed, sample)?.posterior())
            } else {
                None
            };
            let ctx = MatrixContext { spec, a, baseline, scale_post };
            for j in 0..spec.samples {
                let mut r = rng::stream(seed, &[i as u64, 1, j as u64]);
                let xstar = sample(&mut r);
                let b = ctx.a.apply(&xstar)?;
                let (z, leak) = ctx.statistic(&pair, Some(&p2), &b, &xstar)?;
                out.stats.push(z);
                out.max_leak = out.max_leak.max(leak);
            }
        }
    }
    Ok(out)
}

/// Runs the ensemble: `M` random SPD matrices, `N` exact solutions each,
/// one statistic per successful solve, pooled in matrix order.
pub fn run_assessment(spec: &AssessmentSpec) -> Result<StatisticSeries> {
    spec.validate()?;
    let target = spec.target()?;
    let outcomes = map_indexed(spec.exec, spec.matrices, |i| assess_matrix(spec, i));
    let mut samples = Vec::with_capacity(spec.matrices * spec.samples);
    let (mut breakdowns, mut max_leak) = (0usize, 0.0f64);
    for o in outcomes {
        let o = o?;
        samples.extend(o.stats);
        breakdowns += o.breakdowns;
        max_leak = max_leak.max(o.max_leak);
    }
    let total = spec.matrices * spec.samples;
    if breakdowns as f64 > MAX_BREAKDOWN_FRACTION * total as f64 {
        return Err(Error::TooManyBreakdowns { breakdowns, total });
    }
    if breakdowns > 0 {
        log::info!("{breakdowns} of {total} solves skipped after breakdown");
    }
    if max_leak > LEAK_LOG_TOL {
        log::warn!(
            "{} m={} {}: error leaves the posterior range by up to {max_leak:.3e} (relative); clamped",
            spec.prior_mode,
            spec.m,
            spec.regime
        );
    }
    Ok(StatisticSeries { samples, target, m: spec.m, breakdowns, max_leak })
}

/// Dense inverse helper re-exported for tests of the baselines.
pub fn baseline_covariances(a: &MatrixHandle) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let inv = dense_inverse(&a.to_dense())?;
    let ata_inv = &inv * inv.transpose();
    Ok((inv, ata_inv))
}
