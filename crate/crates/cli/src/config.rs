use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use projuq::assessment::{PriorMode, Regime, SolutionSampling, DISCREPANCY_GRID};
use projuq::calibration::Statistic;
use projuq::linalg::{random_spd, MatrixHandle, SpdEnsembleSpec};
use projuq::problems::{biharmonic_matrix, fem_assemble, read_matrix_market};
use projuq::projection::KrylovVariant;
use projuq::rng;

/// Where a command takes its matrix from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MatrixSource {
    /// Matrix Market file.
    File { path: PathBuf },
    /// One draw from the random SPD ensemble, seeded from the master seed.
    RandomSpd { n: usize, scale: f64 },
    Biharmonic { levels: u32 },
    Fem { levels: u32 },
}

impl MatrixSource {
    pub fn load(&self, master_seed: u64) -> Result<MatrixHandle> {
        Ok(match self {
            MatrixSource::File { path } => {
                read_matrix_market(path).with_context(|| format!("reading {}", path.display()))?
            }
            MatrixSource::RandomSpd { n, scale } => {
                let spec = SpdEnsembleSpec { n: *n, scale: *scale, seed: rng::derive_seed(master_seed, &[u64::MAX]) };
                random_spd(&spec, &mut rng::stream(spec.seed, &[]))?
            }
            MatrixSource::Biharmonic { levels } => biharmonic_matrix(*levels)?,
            MatrixSource::Fem { levels } => fem_assemble(*levels)?.a,
        })
    }

    fn validate(&self) -> Result<()> {
        match self {
            MatrixSource::File { path } if !path.exists() => bail!("matrix file {} does not exist", path.display()),
            MatrixSource::RandomSpd { n, scale } => {
                SpdEnsembleSpec { n: *n, scale: *scale, seed: 0 }.validate()?;
            }
            _ => {}
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AssessConfig {
    pub master_seed: Option<u64>,
    pub n: usize,
    pub eig_scale: f64,
    pub matrices: usize,
    pub samples: usize,
    pub m_values: Vec<usize>,
    pub variants: Vec<KrylovVariant>,
    pub prior_modes: Vec<PriorMode>,
    pub regimes: Vec<Regime>,
    /// Observation counts swept for the expensive mode; other modes ignore `k`.
    pub k_values: Vec<usize>,
    pub sampling: SolutionSampling,
    pub true_scale: f64,
    pub alpha: f64,
    pub beta: f64,
    pub grid_points: usize,
    /// Write one CSV of raw statistics per configuration.
    pub dump_samples: bool,
}

impl Default for AssessConfig {
    fn default() -> Self {
        Self {
            master_seed: None,
            n: 100,
            eig_scale: 10.0,
            matrices: 50,
            samples: 5,
            m_values: vec![5, 10, 20, 40, 60, 80],
            variants: KrylovVariant::ALL.to_vec(),
            prior_modes: PriorMode::ALL.to_vec(),
            regimes: Regime::ALL.to_vec(),
            k_values: vec![1],
            sampling: SolutionSampling::StandardNormal,
            true_scale: 1.0,
            alpha: 0.0,
            beta: 0.0,
            grid_points: DISCREPANCY_GRID,
            dump_samples: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SstatConfig {
    pub master_seed: Option<u64>,
    pub matrix: MatrixSource,
    pub checkpoint_every: usize,
    pub max_m: usize,
    /// S-statistic samples per checkpoint for both methods.
    pub samples: usize,
    /// Rank of the CG-gain covariance.
    pub reid_d: usize,
    /// Observations of the statistical calibration.
    pub k: usize,
}

impl Default for SstatConfig {
    fn default() -> Self {
        Self {
            master_seed: None,
            matrix: MatrixSource::RandomSpd { n: 400, scale: 10.0 },
            checkpoint_every: 20,
            max_m: 200,
            samples: 100,
            reid_d: 5,
            k: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PdeConfig {
    pub master_seed: Option<u64>,
    pub levels: u32,
    pub m_values: Vec<usize>,
    pub samples: usize,
    /// Observations of the one-off calibration per `m`.
    pub k: usize,
    /// Radii; the default grid when absent.
    pub r_grid: Option<Vec<f64>>,
}

impl Default for PdeConfig {
    fn default() -> Self {
        Self { master_seed: None, levels: 5, m_values: vec![20, 30, 50], samples: 30, k: 1, r_grid: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenSpdConfig {
    pub master_seed: Option<u64>,
    pub n: usize,
    pub scale: f64,
    pub count: usize,
}

impl Default for GenSpdConfig {
    fn default() -> Self {
        Self { master_seed: None, n: 100, scale: 10.0, count: 1 }
    }
}

/// Update applied by `calibrate`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CalibrationMethod {
    Cheap,
    Observation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CalibrateConfig {
    pub master_seed: Option<u64>,
    pub matrix: MatrixSource,
    pub m: usize,
    pub k: usize,
    pub method: CalibrationMethod,
    pub statistic: Statistic,
    pub variant: KrylovVariant,
    pub alpha: f64,
    pub beta: f64,
}

impl Default for CalibrateConfig {
    fn default() -> Self {
        Self {
            master_seed: None,
            matrix: MatrixSource::RandomSpd { n: 100, scale: 10.0 },
            m: 10,
            k: 1,
            method: CalibrationMethod::Observation,
            statistic: Statistic::Z,
            variant: KrylovVariant::CgLike,
            alpha: 0.0,
            beta: 0.0,
        }
    }
}

/// Shared by every command configuration.
pub trait Config: Serialize + DeserializeOwned + Default + Clone {
    fn seed_slot(&mut self) -> &mut Option<u64>;
    fn validate(&self) -> Result<()>;

    fn master_seed(&self) -> u64 {
        self.clone().seed_slot().expect("seed resolved before use")
    }
}

macro_rules! seed_slot {
    () => {
        fn seed_slot(&mut self) -> &mut Option<u64> {
            &mut self.master_seed
        }
    };
}

fn nonempty<T>(v: &[T], what: &str) -> Result<()> {
    if v.is_empty() {
        bail!("{what} must not be empty");
    }
    Ok(())
}

impl Config for AssessConfig {
    seed_slot!();

    fn validate(&self) -> Result<()> {
        nonempty(&self.m_values, "m_values")?;
        nonempty(&self.variants, "variants")?;
        nonempty(&self.prior_modes, "prior_modes")?;
        nonempty(&self.regimes, "regimes")?;
        nonempty(&self.k_values, "k_values")?;
        if self.grid_points < 2 {
            bail!("grid_points must be >= 2");
        }
        for spec in crate::commands::assess_specs(self) {
            spec.validate()?;
        }
        Ok(())
    }
}

impl Config for SstatConfig {
    seed_slot!();

    fn validate(&self) -> Result<()> {
        self.matrix.validate()?;
        if self.checkpoint_every == 0 || self.max_m < self.checkpoint_every {
            bail!("need 1 <= checkpoint_every <= max_m");
        }
        if self.samples == 0 || self.k == 0 {
            bail!("samples and k must be >= 1");
        }
        Ok(())
    }
}

impl Config for PdeConfig {
    seed_slot!();

    fn validate(&self) -> Result<()> {
        if !(2..=7).contains(&self.levels) {
            bail!("pde levels must be in 2..=7, got {}", self.levels);
        }
        nonempty(&self.m_values, "m_values")?;
        let n = ((1usize << self.levels) - 1).pow(2);
        if let Some(&m) = self.m_values.iter().find(|&&m| m == 0 || m > n) {
            bail!("m = {m} outside 1..={n}");
        }
        if self.samples < 2 || self.k == 0 {
            bail!("need samples >= 2 and k >= 1");
        }
        if let Some(grid) = &self.r_grid {
            nonempty(grid, "r_grid")?;
            if let Some(r) = grid.iter().find(|r| !(**r > 0.0 && **r < std::f64::consts::FRAC_1_SQRT_2)) {
                bail!("radius {r} outside (0, 1/sqrt 2)");
            }
        }
        Ok(())
    }
}

impl Config for GenSpdConfig {
    seed_slot!();

    fn validate(&self) -> Result<()> {
        SpdEnsembleSpec { n: self.n, scale: self.scale, seed: 0 }.validate()?;
        if self.count == 0 {
            bail!("count must be >= 1");
        }
        Ok(())
    }
}

impl Config for CalibrateConfig {
    seed_slot!();

    fn validate(&self) -> Result<()> {
        self.matrix.validate()?;
        if self.m == 0 {
            bail!("m must be >= 1");
        }
        if self.method == CalibrationMethod::Observation && self.k == 0 {
            bail!("observation calibration needs k >= 1");
        }
        projuq::distributions::ScalePosterior::new(self.alpha, self.beta)?;
        Ok(())
    }
}

/// `metadata.json` of a run; `--config` also accepts it directly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata<C> {
    pub command: String,
    pub version: String,
    pub threads: Option<usize>,
    pub config: C,
}

/// Loads a config file (bare config or a previous run's metadata), applies the
/// seed override and validates.
pub fn resolve<C: Config>(path: Option<&Path>, seed: Option<u64>) -> Result<C> {
    let mut cfg: C = match path {
        None => C::default(),
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading config {}", p.display()))?;
            let value: serde_json::Value =
                serde_json::from_str(&text).with_context(|| format!("parsing config {}", p.display()))?;
            let inner = match value {
                serde_json::Value::Object(ref o) if o.contains_key("command") && o.contains_key("config") => {
                    o["config"].clone()
                }
                v => v,
            };
            serde_json::from_value(inner).with_context(|| format!("invalid config {}", p.display()))?
        }
    };
    if let Some(s) = seed {
        *cfg.seed_slot() = Some(s);
    }
    if cfg.seed_slot().is_none() {
        bail!("master_seed is required: set it in the config or pass --seed");
    }
    cfg.validate()?;
    Ok(cfg)
}
