use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use nalgebra::DVector;
use rand_distr::{Distribution, StandardNormal};

use projuq::assessment::{discrepancy, run_assessment, AssessmentSpec, PriorMode, Regime, SolutionSampling, StatisticSeries};
use projuq::calibration::{
    calibrate_by_observation, calibrate_cheap, reid_covariance, reid_s_statistic, reid_underestimate,
    s_statistic_samples, ObservationPlan, P1Mode, Statistic,
};
use projuq::distributions::ScalePosterior;
use projuq::linalg::{random_spd_with_eigs, MatrixHandle, SpdEnsembleSpec};
use projuq::problems::{
    calibrate_pde, default_r_grid, fem_assemble, pde_uncertainty_band, write_matrix_market, BandSpec,
};
use projuq::projection::{cg, krylov_pair, KrylovVariant};
use projuq::{rng, stats, Error, Execution};

use crate::config::{AssessConfig, CalibrateConfig, CalibrationMethod, Config, GenSpdConfig, PdeConfig, SstatConfig};

fn write(dir: &Path, name: &str, contents: &str) -> Result<()> {
    let path = dir.join(name);
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))
}

fn randn(n: usize, r: &mut rng::StreamRng) -> DVector<f64> {
    DVector::from_fn(n, |_, _| StandardNormal.sample(r))
}

/// Every runnable configuration of an assess config, in output order.
/// Mode/regime pairs without a defined target are left out.
pub fn assess_specs(cfg: &AssessConfig) -> Vec<AssessmentSpec> {
    let mut out = Vec::new();
    for &variant in &cfg.variants {
        for &m in &cfg.m_values {
            for &mode in &cfg.prior_modes {
                if cfg.sampling == SolutionSampling::PriorConsistent && !mode.supports_hierarchical() {
                    continue;
                }
                for &regime in &cfg.regimes {
                    if regime == Regime::Hierarchical && !mode.supports_hierarchical() {
                        continue;
                    }
                    let ks: &[usize] = if mode == PriorMode::Expensive { &cfg.k_values } else { &[0] };
                    for &k in ks {
                        out.push(AssessmentSpec {
                            n: cfg.n,
                            m,
                            eig_scale: cfg.eig_scale,
                            matrices: cfg.matrices,
                            samples: cfg.samples,
                            variant,
                            prior_mode: mode,
                            regime,
                            k,
                            sampling: cfg.sampling,
                            true_scale: cfg.true_scale,
                            prior: ScalePosterior { alpha: cfg.alpha, beta: cfg.beta },
                            master_seed: cfg.master_seed.unwrap_or(0),
                            exec: Execution::Parallel,
                        });
                    }
                }
            }
        }
    }
    out
}

/// Errors that make one configuration's discrepancy undefined without
/// invalidating the run.
fn recoverable(e: &Error) -> bool {
    matches!(
        e,
        Error::UndefinedMean(_) | Error::ImproperPosterior { .. } | Error::DegenerateSample(_) | Error::TooManyBreakdowns { .. }
    )
}

fn f(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn assess(cfg: &AssessConfig, dir: &Path) -> Result<()> {
    let mut csv = String::from("variant,m,prior_mode,statistic_kind,k,discrepancy,n_samples,breakdown_count\n");
    for spec in assess_specs(cfg) {
        let label = format!("{} m={} {} {} k={}", spec.variant, spec.m, spec.prior_mode, spec.regime, spec.k);
        let (d, n_samples, breakdowns, series) = match run_assessment(&spec) {
            Ok(series) => {
                let d = match discrepancy(&series, cfg.grid_points) {
                    Ok(d) => d,
                    Err(e) if recoverable(&e) => {
                        log::warn!("{label}: discrepancy undefined: {e}");
                        f64::NAN
                    }
                    Err(e) => return Err(e.into()),
                };
                (d, series.samples.len(), series.breakdowns, Some(series))
            }
            Err(e) if recoverable(&e) => {
                log::warn!("{label}: {e}");
                let b = if let Error::TooManyBreakdowns { breakdowns, .. } = e { breakdowns } else { 0 };
                (f64::NAN, 0, b, None)
            }
            Err(e) => return Err(anyhow::Error::new(e).context(label)),
        };
        log::info!("{label}: discrepancy {d:.4}");
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{},{}",
            spec.variant,
            spec.m,
            spec.prior_mode,
            spec.regime,
            spec.k,
            f(d),
            n_samples,
            breakdowns
        );
        if cfg.dump_samples {
            if let Some(series) = series.as_ref().map(StatisticSeries::to_csv) {
                let name =
                    format!("samples/{}_m{}_{}_{}_k{}.csv", spec.variant, spec.m, spec.prior_mode, spec.regime, spec.k);
                write(dir, &name, &series)?;
            }
        }
    }
    write(dir, "discrepancy.csv", &csv)
}

pub fn sstat(cfg: &SstatConfig, dir: &Path) -> Result<()> {
    let seed = cfg.master_seed();
    let a = cfg.matrix.load(seed)?;
    let n = a.nrows();
    log::info!("sstat on n = {n} matrix");
    let xstar = randn(n, &mut rng::stream(seed, &[0]));
    let b = a.apply(&xstar)?;
    let trace = cg(&a, &b, &DVector::zeros(n), cfg.max_m + cfg.reid_d)?;
    write(dir, "cg_trace.csv", &trace.to_csv())?;

    let q = |xs: &[f64], p: f64| f(stats::quantile(xs, p));
    let mut csv = String::from(
        "m,exact_A_error,reid_underestimate,reid_q01,reid_q05,reid_q95,reid_q99,ours_q01,ours_q05,ours_q95,ours_q99\n",
    );
    let mut m = cfg.checkpoint_every;
    while m <= cfg.max_m && m < n {
        if m + cfg.reid_d > trace.iterations() {
            log::warn!("CG stopped after {} iterations; checkpoints from m = {m} skipped", trace.iterations());
            break;
        }
        let exact = a.quad_form(&(&xstar - trace.iterate(m)))?;
        let rc = reid_covariance(&trace, m, cfg.reid_d)?;
        let mut r = rng::stream(seed, &[1, m as u64]);
        let reid: Vec<f64> = (0..cfg.samples).map(|_| reid_s_statistic(&rc, &mut r).1).collect();
        let plan = ObservationPlan {
            m,
            k: cfg.k,
            statistic: Statistic::S,
            mode: P1Mode::CgTrace,
            seed: rng::derive_seed(seed, &[2, m as u64]),
            exec: Execution::Parallel,
        };
        let cal = calibrate_by_observation(
            &a,
            &plan,
            ScalePosterior::improper(),
            |a, b, m| krylov_pair(a, b, m, KrylovVariant::CgLike),
            |r| randn(n, r),
        )?;
        let ours = s_statistic_samples(&cal, n - m, cfg.samples, &mut rng::stream(seed, &[3, m as u64]))?;
        let _ = writeln!(
            csv,
            "{m},{},{},{},{},{},{},{},{},{},{}",
            f(exact),
            f(reid_underestimate(&trace, m, cfg.reid_d)?),
            q(&reid, 0.01),
            q(&reid, 0.05),
            q(&reid, 0.95),
            q(&reid, 0.99),
            q(&ours, 0.01),
            q(&ours, 0.05),
            q(&ours, 0.95),
            q(&ours, 0.99)
        );
        m += cfg.checkpoint_every;
    }
    write(dir, "sstat.csv", &csv)?;
    let summary = serde_json::json!({ "n": n, "cg_iterations": trace.iterations(), "cg_converged": trace.converged });
    write(dir, "summary.json", &serde_json::to_string_pretty(&summary)?)
}

pub fn pde(cfg: &PdeConfig, dir: &Path) -> Result<()> {
    let seed = cfg.master_seed();
    let problem = fem_assemble(cfg.levels)?;
    let n = problem.n();
    let grid = cfg.r_grid.clone().unwrap_or_else(default_r_grid);
    for &m in &cfg.m_values {
        let scale = if m == n {
            0.0
        } else {
            let cal = calibrate_pde(&problem, m, cfg.k, rng::derive_seed(seed, &[m as u64, 0]), Execution::Parallel)?;
            write(dir, &format!("calibration_m{m}.json"), &cal.to_json())?;
            cal.posterior().mean()?
        };
        let spec = BandSpec {
            m,
            samples: cfg.samples,
            scale,
            seed: rng::derive_seed(seed, &[m as u64, 1]),
            exec: Execution::Parallel,
        };
        let curve = pde_uncertainty_band(&problem, &grid, &spec)?;
        log::info!("m = {m}: scale {scale:.4e}, mean absolute gap {:.4e}", curve.mean_abs_gap());
        write(dir, &format!("loss_m{m}.csv"), &curve.to_csv())?;
    }
    Ok(())
}

pub fn gen_spd(cfg: &GenSpdConfig, dir: &Path) -> Result<()> {
    let seed = cfg.master_seed();
    for i in 0..cfg.count {
        let spec = SpdEnsembleSpec { n: cfg.n, scale: cfg.scale, seed: rng::derive_seed(seed, &[i as u64]) };
        let (a, eigs) = random_spd_with_eigs(&spec, &mut rng::stream(spec.seed, &[]))?;
        write_matrix_market(dir.join(format!("spd_{i}.mtx")), &a)?;
        let mut csv = String::from("eigenvalue\n");
        for e in eigs.iter() {
            let _ = writeln!(csv, "{}", f(*e));
        }
        write(dir, &format!("spd_{i}_eigs.csv"), &csv)?;
    }
    Ok(())
}

pub fn calibrate(cfg: &CalibrateConfig, dir: &Path) -> Result<()> {
    let seed = cfg.master_seed();
    let a: MatrixHandle = cfg.matrix.load(seed)?;
    let n = a.nrows();
    if cfg.m >= n {
        anyhow::bail!("m = {} must be below n = {n}", cfg.m);
    }
    let prior = ScalePosterior::new(cfg.alpha, cfg.beta)?;
    let variant = cfg.variant;
    let result = match cfg.method {
        CalibrationMethod::Cheap => {
            let xstar = randn(n, &mut rng::stream(seed, &[0]));
            let b = a.apply(&xstar)?;
            let pair = krylov_pair(&a, &b, cfg.m, variant)?;
            calibrate_cheap(&a, &b, &DVector::zeros(n), &pair, prior)?
        }
        CalibrationMethod::Observation => {
            let plan = ObservationPlan {
                m: cfg.m,
                k: cfg.k,
                statistic: cfg.statistic,
                mode: P1Mode::auto(n),
                seed: rng::derive_seed(seed, &[1]),
                exec: Execution::Parallel,
            };
            calibrate_by_observation(&a, &plan, prior, move |a, b, m| krylov_pair(a, b, m, variant), |r| randn(n, r))?
        }
    };
    write(dir, "calibration.json", &result.to_json())
}
