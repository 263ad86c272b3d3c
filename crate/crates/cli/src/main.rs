//! `histloom` command line.
//!
//! Every subcommand takes `--seed` and `--json`; without `--json` reports
//! are printed as plain text. Timings and draw counts go to stderr so that
//! stdout is reproducible from the command line, the seed and the inputs.
//! `HISTLOOM_THREADS` caps the worker pool.

mod io;
mod lab;
mod learn;
mod measure;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(
    name = "histloom",
    version,
    about = "Learn variable-width histograms from samples"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Copy)]
pub struct Common {
    /// Root seed for all randomness.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Print the report as JSON.
    #[arg(long, global = true)]
    pub json: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Learn a histogram from a sample file or a synthetic target.
    Learn(learn::LearnArgs),
    /// Pick the best hypothesis of a candidate pool by a Scheffé tournament.
    Select(learn::SelectArgs),
    /// Distances between a hypothesis and a target or another hypothesis.
    Eval(measure::EvalArgs),
    /// Exact oracles.
    #[command(subcommand)]
    Oracle(measure::OracleCommand),
    /// Time the merging learner over a grid of (k, eps, m).
    Bench(lab::BenchArgs),
    /// Distinguishing experiments on the hard ensemble.
    Lowerbound(lab::LowerboundArgs),
    /// Draw a sample from a synthetic target.
    Synth(lab::SynthArgs),
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Text,
    Binary,
}

/// Where samples come from: a file or a synthetic target.
#[derive(Args, Debug, Clone)]
pub struct SampleInput {
    /// Sample file (text, or binary with the HLS1 header).
    #[arg(long, conflicts_with = "target")]
    pub input: Option<PathBuf>,
    /// Synthetic target spec, e.g. `kflat:breaks=0.5;levels=1.5,0.5`.
    #[arg(long, required_unless_present = "input")]
    pub target: Option<String>,
}

fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var("HISTLOOM_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n >= 1)
        .with_context(|| format!("HISTLOOM_THREADS must be a positive integer, got `{raw}`"))?;
    #[cfg(feature = "parallel")]
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .context("cannot size the worker pool")?;
    #[cfg(not(feature = "parallel"))]
    let _ = threads;
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    configure_threads()?;
    let common = cli.common;
    match cli.command {
        Command::Learn(args) => learn::learn(&args, common),
        Command::Select(args) => learn::select(&args, common),
        Command::Eval(args) => measure::eval(&args, common),
        Command::Oracle(cmd) => measure::oracle(&cmd, common),
        Command::Bench(args) => lab::bench(&args, common),
        Command::Lowerbound(args) => lab::lowerbound(&args, common),
        Command::Synth(args) => lab::synth(&args, common),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
