//! `thermolab` command-line driver.

mod commands;
mod config;
mod error;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use crate::commands::Command;
use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::manifest::RunManifest;

#[derive(Parser)]
#[command(name = "thermolab", version, about = "Thermostat flow experiments on the Bolza surface")]
struct Cli {
    /// TOML configuration; built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory, overriding `output_dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Master seed, overriding `seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; all cores when omitted.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand, Clone, Copy)]
enum Sub {
    /// Structural and numerical self-checks.
    Validate,
    /// Period derivatives and index-form identities along short closed geodesics.
    Orbits,
    /// Monte Carlo entropy second-derivative bound.
    Bound,
    /// Length-spectrum entropy estimates over the lambda grid.
    Entropy,
}

impl Sub {
    fn name(self) -> &'static str {
        match self {
            Sub::Validate => "validate",
            Sub::Orbits => "orbits",
            Sub::Bound => "bound",
            Sub::Entropy => "entropy",
        }
    }

    fn handler(self) -> Command {
        match self {
            Sub::Validate => commands::run_validate,
            Sub::Orbits => commands::run_orbits,
            Sub::Bound => commands::run_bound,
            Sub::Entropy => commands::run_entropy,
        }
    }
}

fn load(cli: &Cli) -> Result<ExperimentConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = Some(seed);
    }
    if let Some(out) = &cli.out {
        cfg.output_dir = out.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: &Cli, cfg: &ExperimentConfig) -> Result<u8, CliError> {
    let start = Instant::now();
    std::fs::create_dir_all(&cfg.output_dir)?;
    let outcome = cli.command.handler()(cfg, &cfg.output_dir)?;
    for s in &outcome.suites {
        println!("{:<14} {}  ({:.2}s)", s.name, if s.passed { "PASS" } else { "FAIL" }, s.wall_seconds);
    }
    let manifest = RunManifest {
        command: cli.command.name().into(),
        artifact_version: env!("CARGO_PKG_VERSION").into(),
        config_hash: cfg.hash(),
        seed: cfg.seed(),
        suites: outcome.suites,
        outputs: outcome.outputs,
        exit_code: outcome.exit_code,
        wall_seconds: start.elapsed().as_secs_f64(),
    };
    manifest.write(&cfg.output_dir)?;
    Ok(outcome.exit_code)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match load(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(2);
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("thread pool: {e}");
        }
    }
    match run(&cli, &cfg) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(1)
        }
    }
}
