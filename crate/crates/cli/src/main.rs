//! `bandgp` command-line harness: gradient checks, timing sweeps and
//! desk-scale GP / GMRF experiments. Every command writes one JSON document
//! with the fields `command, seed, params, results, timings, version`.

mod cmd;
mod error;
mod io;
mod report;

use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use crate::report::Report;

#[derive(Debug, Parser)]
#[command(name = "bandgp", version, about = "Banded Gaussian Markov model toolkit")]
struct Cli {
    /// Seed for every random draw made by the command.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Write the JSON report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<String>,

    /// Plain-text `key = value` file of defaults; explicit flags win.
    #[arg(long, global = true)]
    config: Option<String>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(untagged)]
enum Command {
    /// Finite-difference checks of every reverse-mode kernel.
    CheckGrads(cmd::check_grads::Args),
    /// Objective-plus-gradient timings over sizes or bandwidths.
    Bench(cmd::bench::Args),
    /// Maximum-likelihood kernel fit to a `t,y` series.
    FitGpr(cmd::fit_gpr::Args),
    /// Variational posterior of a graph GMRF with Poisson counts.
    FitVi(cmd::fit_vi::Args),
    /// Whitened HMC on a conjugate toy or a graph GMRF.
    SampleHmc(cmd::sample_hmc::Args),
    /// Kalman, banded and dense log likelihoods of one model side by side.
    KalmanCompare(cmd::kalman_compare::Args),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::CheckGrads(_) => "check-grads",
            Command::Bench(_) => "bench",
            Command::FitGpr(_) => "fit-gpr",
            Command::FitVi(_) => "fit-vi",
            Command::SampleHmc(_) => "sample-hmc",
            Command::KalmanCompare(_) => "kalman-compare",
        }
    }
}

fn config_path(args: &[String]) -> Option<String> {
    args.iter().enumerate().find_map(|(k, a)| {
        a.strip_prefix("--config=")
            .map(str::to_string)
            .or_else(|| (a == "--config").then(|| args.get(k + 1).cloned()).flatten())
    })
}

fn run() -> error::Result<bool> {
    let mut args: Vec<String> = std::env::args().collect();
    if let Some(path) = config_path(&args) {
        let cfg = io::parse_config(&io::read_to_string(&path)?)?;
        args = io::merge_config(args, &cfg);
    }
    let cli = Cli::parse_from(args);
    let mut report = Report::new(cli.command.name(), cli.seed, &cli.command);
    let passed = match &cli.command {
        Command::CheckGrads(a) => cmd::check_grads::run(a, cli.seed, &mut report)?,
        Command::Bench(a) => cmd::bench::run(a, cli.seed, &mut report)?,
        Command::FitGpr(a) => cmd::fit_gpr::run(a, &mut report)?,
        Command::FitVi(a) => cmd::fit_vi::run(a, &mut report)?,
        Command::SampleHmc(a) => cmd::sample_hmc::run(a, cli.seed, &mut report)?,
        Command::KalmanCompare(a) => cmd::kalman_compare::run(a, &mut report)?,
    };
    report.set("passed", passed);
    report.write(cli.out.as_deref())?;
    Ok(passed)
}

fn main() -> ExitCode {
    match run() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
