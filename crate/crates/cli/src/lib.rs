//! Command-line front end: configuration, dispatch and run artifacts.

pub mod commands;
pub mod config;
pub mod output;
pub mod setup;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use anyhow::Result;
use clap::{Parser, Subcommand};

use cholera_pomp::exec::{configure_workers, Parallelism};
use cholera_pomp::Error;

use config::{Overrides, RunConfig};
use output::{Clock, Failure, Manifest, RunDir};

#[derive(Parser, Debug)]
#[command(name = "cholera-pomp", version, about = "Simulation and inference for cholera POMP models")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// TOML run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Root seed; overrides the configured one
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (0 = all cores, 1 = sequential).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Override `key=value`; dotted keys address config tables, other keys
    /// are model parameters.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    /// Simulate the process and measurement models.
    Simulate,
    /// Estimate the log-likelihood with a particle filter.
    Filter,
    /// Maximize the likelihood by iterated filtering.
    FitIf2,
    /// Maximize the likelihood by iterated block particle filtering.
    FitIbpf,
    /// Fit the deterministic skeleton by trajectory matching.
    FitTraj,
    /// Fit the log-linear negative binomial benchmark.
    Benchmark,
    /// Compute a profile likelihood over a grid.
    Profile,
    /// Smooth a profile and report its confidence interval.
    Mcap,
    /// Forecast vaccination scenarios and elimination probabilities.
    Forecast,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Filter => "filter",
            Command::FitIf2 => "fit-if2",
            Command::FitIbpf => "fit-ibpf",
            Command::FitTraj => "fit-traj",
            Command::Benchmark => "benchmark",
            Command::Profile => "profile",
            Command::Mcap => "mcap",
            Command::Forecast => "forecast",
        }
    }
}

/// Exit code and label for a failure, from the innermost library error.
pub fn categorize(e: &anyhow::Error) -> (i32, &'static str) {
    for cause in e.chain() {
        if let Some(err) = cause.downcast_ref::<Error>() {
            return match err {
                Error::InvalidParameter { .. }
                | Error::MissingParameter(_)
                | Error::UnknownParameter(_)
                | Error::InvalidInput(_)
                | Error::InvalidGrid(_) => (2, "config"),
                Error::Data(_)
                | Error::Csv(_)
                | Error::CovariateGap { .. }
                | Error::MissingRainfall { .. }
                | Error::Dimension(_) => (3, "data"),
                Error::NonFiniteDerivative(_) | Error::NonFiniteObjective(_) | Error::NoFiniteCandidate => {
                    (4, "numerical")
                }
                Error::Io(_) => (5, "io"),
            };
        }
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return (5, "io");
        }
        if let Some(err) = cause.downcast_ref::<csv::Error>() {
            return if matches!(err.kind(), csv::ErrorKind::Io(_)) { (5, "io") } else { (3, "data") };
        }
        if cause.is::<std::num::ParseFloatError>() || cause.is::<std::num::ParseIntError>() {
            return (3, "data");
        }
    }
    (2, "config")
}

fn dispatch(cmd: Command, cfg: &RunConfig, out: &mut RunDir) -> Result<serde_json::Value> {
    if cfg.model == "benchmark" && cmd != Command::Benchmark && cmd != Command::Mcap {
        anyhow::bail!("model `benchmark` only supports the benchmark command");
    }
    let par = Parallelism::from_workers(cfg.workers);
    match cmd {
        Command::Simulate => commands::simulate_cmd(cfg, par, out),
        Command::Filter => commands::filter_cmd(cfg, par, out),
        Command::FitIf2 => commands::fit_if2_cmd(cfg, par, out),
        Command::FitIbpf => commands::fit_ibpf_cmd(cfg, par, out),
        Command::FitTraj => commands::fit_traj_cmd(cfg, out),
        Command::Benchmark => commands::benchmark_cmd(cfg, out),
        Command::Profile => commands::profile_cmd(cfg, par, out),
        Command::Mcap => commands::mcap_cmd(cfg, out),
        Command::Forecast => commands::forecast_cmd(cfg, par, out),
    }
}

/// Resolve the configuration for parsed arguments.
pub fn resolve(cli: &Cli) -> Result<RunConfig> {
    let o = Overrides {
        seed: cli.seed,
        workers: cli.workers,
        out: cli.out.clone(),
        sets: cli.set.clone(),
    };
    config::load(cli.config.as_deref(), &o)
}

/// Run one command and write its manifest; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let cfg = match resolve(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error [config]: {e:#}");
            if let Some(dir) = &cli.out {
                let failure = Failure { category: "config", message: format!("{e:#}") };
                let clock = Clock::start();
                return match write_manifest(dir, cli.command.name(), None, &clock, Vec::new(), Some(failure)) {
                    Ok(()) => 2,
                    Err(e) => {
                        eprintln!("error [io]: cannot write manifest: {e}");
                        5
                    }
                };
            }
            return 2;
        }
    };
    configure_workers(cfg.workers);
    let clock = Clock::start();
    let mut out = match RunDir::create(&cfg.out) {
        Ok(d) => d,
        Err(e) => {
            eprintln!("error [io]: {e:#}");
            return 5;
        }
    };
    let result = dispatch(cli.command, &cfg, &mut out);
    let (code, error, summary) = match result {
        Ok(summary) => (0, None, Some(summary)),
        Err(e) => {
            let (code, category) = categorize(&e);
            eprintln!("error [{category}]: {e:#}");
            (code, Some(Failure { category, message: format!("{e:#}") }), None)
        }
    };
    if let Some(s) = &summary {
        let full = serde_json::json!({ "command": cli.command.name(), "result": s });
        if let Err(e) = out.json("summary.json", &full) {
            eprintln!("error [io]: {e:#}");
            return 5;
        }
    }
    if let Err(e) = write_manifest(out.root(), cli.command.name(), Some(&cfg), &clock, out.outputs().to_vec(), error) {
        eprintln!("error [io]: cannot write manifest: {e}");
        return 5;
    }
    code
}

fn write_manifest(
    dir: &Path,
    command: &str,
    cfg: Option<&RunConfig>,
    clock: &Clock,
    outputs: Vec<String>,
    error: Option<Failure>,
) -> std::io::Result<()> {
    let status = match (&error, outputs.is_empty()) {
        (None, _) => "complete",
        (Some(_), true) => "failed",
        (Some(_), false) => "partial",
    };
    let manifest = Manifest {
        command,
        version: env!("CARGO_PKG_VERSION"),
        seed: cfg.and_then(|c| c.seed),
        config: cfg,
        started_unix: clock.started_unix(),
        wall_time_s: clock.elapsed(),
        status,
        outputs,
        error,
    };
    std::fs::create_dir_all(dir)?;
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    std::fs::write(dir.join("manifest.json"), text + "\n")
}
