//! `projuq` experiment driver.

mod commands;
mod config;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use config::{CalibrateConfig, Config, GenSpdConfig, Metadata, PdeConfig, SstatConfig, AssessConfig};

#[derive(Parser, Debug)]
#[command(name = "projuq", version, about = "Calibrated probabilistic projection solvers: experiments")]
struct Cli {
    /// JSON config; a previous run's metadata.json is accepted too.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed, overrides the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output root; the PROJUQ_OUT environment variable takes precedence.
    #[arg(long, global = true, default_value = "runs")]
    out: PathBuf,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Ensemble calibration assessment; discrepancy per configuration.
    Assess,
    /// A-norm error against CG-gain and observation-calibrated S-statistics.
    Sstat,
    /// Loss bands for the point-source heating problem.
    Pde,
    /// Draw matrices from the random SPD ensemble.
    GenSpd,
    /// One scale calibration.
    Calibrate,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Assess => "assess",
            Command::Sstat => "sstat",
            Command::Pde => "pde",
            Command::GenSpd => "gen-spd",
            Command::Calibrate => "calibrate",
        }
    }
}

/// `<root>/<command>-<UTC timestamp>-s<seed>`, suffixed if taken.
fn create_run_dir(root: &Path, command: &str, seed: u64) -> Result<PathBuf> {
    let stamp = chrono::Utc::now().format("%Y%m%dT%H%M%SZ");
    let base = format!("{command}-{stamp}-s{seed}");
    fs::create_dir_all(root).with_context(|| format!("creating {}", root.display()))?;
    for i in 0.. {
        let dir = if i == 0 { root.join(&base) } else { root.join(format!("{base}-{i}")) };
        match fs::create_dir(&dir) {
            Ok(()) => return Ok(dir),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => continue,
            Err(e) => return Err(e).with_context(|| format!("creating {}", dir.display())),
        }
    }
    unreachable!()
}

fn execute<C: Config>(cli: &Cli, run: fn(&C, &Path) -> Result<()>) -> Result<PathBuf> {
    let cfg: C = config::resolve(cli.config.as_deref(), cli.seed)?;
    let root = std::env::var_os("PROJUQ_OUT").map(PathBuf::from).unwrap_or_else(|| cli.out.clone());
    let name = cli.command.name();
    let dir = create_run_dir(&root, name, cfg.master_seed())?;
    let meta = Metadata {
        command: name.to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        threads: cli.threads,
        config: cfg.clone(),
    };
    fs::write(dir.join("metadata.json"), serde_json::to_string_pretty(&meta)? + "\n")?;
    run(&cfg, &dir)?;
    Ok(dir)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: cannot size thread pool: {e}");
            return ExitCode::FAILURE;
        }
    }
    let result = match cli.command {
        Command::Assess => execute::<AssessConfig>(&cli, commands::assess),
        Command::Sstat => execute::<SstatConfig>(&cli, commands::sstat),
        Command::Pde => execute::<PdeConfig>(&cli, commands::pde),
        Command::GenSpd => execute::<GenSpdConfig>(&cli, commands::gen_spd),
        Command::Calibrate => execute::<CalibrateConfig>(&cli, commands::calibrate),
    };
    match result {
        Ok(dir) => {
            println!("{}", dir.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
