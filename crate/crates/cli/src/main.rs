//! `disint`: disintegration, Fubini checks and transport conjugacy from the
//! command line.
//!
//! Exit status: 0 when every check passes, 2 when a check fails, 1 on bad
//! input or usage.

mod diagonal;
mod disintegrate;
mod fubini;
mod ot;
mod output;

use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use disint_core::ScaleSchedule;

#[derive(Debug, Parser)]
#[command(name = "disint", version, about = "Disintegrate joint measures and check Fubini and transport conjugacy")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Exact and estimated disintegration of a measure file, with reconstruction audit.
    Disintegrate(disintegrate::DisintegrateArgs),
    /// Ball ratios and outer measure of [0, x) under the uniform diagonal measure.
    DiagonalExample(diagonal::DiagonalArgs),
    /// Iterated integrals in both orders against the joint sum.
    CheckFubini(fubini::FubiniArgs),
    /// Solve or load a transport instance and check almost-sure conjugacy of its prices.
    OtVerify(ot::OtArgs),
}

/// Radii `rho_k = rho_base * 2^-k` for `k = 0..=scales`.
#[derive(Debug, Clone, Args)]
pub struct ScheduleArgs {
    /// Coarsest radius; defaults to the diameter of the X carrier.
    #[arg(long)]
    pub rho_base: Option<f64>,
    #[arg(long, default_value_t = disint_core::disintegration::DEFAULT_SCALES)]
    pub scales: usize,
    /// Finest defined scales used for the upper and lower limits.
    #[arg(long, default_value_t = 3)]
    pub tail: usize,
}

impl ScheduleArgs {
    pub fn schedule(&self, diameter: f64) -> anyhow::Result<ScaleSchedule> {
        if self.scales == 0 {
            bail!("--scales must be at least 1");
        }
        if self.tail == 0 {
            bail!("--tail must be at least 1");
        }
        let base = match self.rho_base {
            Some(b) if b.is_finite() && b > 0.0 => b,
            Some(b) => bail!("--rho-base must be positive and finite, got {b}"),
            None if diameter > 0.0 => diameter,
            None => 1.0,
        };
        Ok(ScaleSchedule::dyadic(base, self.scales)?)
    }
}

pub fn positive(name: &str, v: f64) -> anyhow::Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        bail!("{name} must be positive, got {v}")
    }
}

fn configure_threads() -> anyhow::Result<()> {
    let Ok(raw) = std::env::var("DISINT_THREADS") else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().with_context(|| format!("DISINT_THREADS={raw:?} is not a count"))?;
    if n == 0 {
        bail!("DISINT_THREADS must be at least 1");
    }
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    configure_threads()?;
    match cli.command {
        Command::Disintegrate(a) => disintegrate::run(&a),
        Command::DiagonalExample(a) => diagonal::run(&a),
        Command::CheckFubini(a) => fubini::run(&a),
        Command::OtVerify(a) => ot::run(&a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
