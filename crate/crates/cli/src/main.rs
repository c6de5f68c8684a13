//! `fdareg`: simulation, forecasting, tuning and diagnostics from one config.

mod artifacts;
mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use artifacts::Artifacts;
use config::RunConfig;

#[derive(Parser)]
#[command(
    name = "fdareg",
    version,
    about = "Functional kernel regression experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML run configuration; defaults are used when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides `out` in the config; default `out`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Top-level seed (overrides `seed` in the config).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Monte Carlo MSPE comparison of FLC and FLL on the Wiener design.
    Simulate,
    /// Rolling one-step-ahead forecasts from an hourly load CSV.
    Forecast,
    /// Leave-one-out tuning on a functional sample CSV.
    Cv,
    /// Median MSPE across sample sizes with a log-log slope.
    Ratecheck,
    /// Small-ball fractions and pairwise distance quantiles.
    Diagnose,
}

enum Failure {
    Config(anyhow::Error),
    Run(anyhow::Error),
}

fn load_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.out = Some(out.clone());
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> std::result::Result<bool, Failure> {
    let cfg = load_config(&cli).map_err(Failure::Config)?;
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Failure::Config(anyhow::anyhow!(
                "--threads must be positive"
            )));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")
            .map_err(Failure::Run)?;
    }
    let hash = cfg.hash().map_err(Failure::Run)?;
    let dir = cfg.out.clone().unwrap_or_else(|| PathBuf::from("out"));
    let mut out = Artifacts::new(&dir, cfg.seed, hash.clone()).map_err(Failure::Run)?;
    eprintln!("seed={} config_hash={hash}", out.seed());
    let result = match cli.command {
        Command::Simulate => commands::simulate(&cfg, &mut out),
        Command::Forecast => commands::forecast(&cfg, &mut out),
        Command::Cv => commands::cv(&cfg, &mut out),
        Command::Ratecheck => commands::ratecheck(&cfg, &mut out),
        Command::Diagnose => commands::diagnose(&cfg, &mut out),
    };
    let complete = out.report();
    result.map_err(Failure::Run)?;
    Ok(complete)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(Failure::Config(e)) => {
            eprintln!("config error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Run(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
