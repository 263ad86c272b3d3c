//! `bench`, `lowerbound` and `synth`.

use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use histloom::bench::{run_grid, BenchCell, BenchReport};
use histloom::lowerbound::{
    agnostic_floor_demo, distinguishing_experiment, Distinguisher, LabConfig, LabReport,
};
use histloom::sample_io::{format_sample, write_samples, SampleFormat};
use histloom::targets::TargetMeta;
use histloom::{SampleSource, TargetSource};
use serde::Serialize;

use crate::io::{generate, print_json, write_json};
use crate::learn::open_unit;
use crate::{Common, Format};

#[derive(Args, Debug)]
pub struct BenchArgs {
    /// Piece counts, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub k: Vec<usize>,
    /// Accuracies, comma separated.
    #[arg(long, value_delimiter = ',', required = true, value_parser = open_unit)]
    pub eps: Vec<f64>,
    /// Empirical sample sizes, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub m: Vec<usize>,
    /// Timed repetitions per cell (after one warm-up run).
    #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u64).range(1..))]
    pub reps: u64,
    /// Also write the CSV here.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Fail when the fitted log-log slope of time against m exceeds this.
    #[arg(long)]
    pub max_slope: Option<f64>,
}

fn bench_csv(report: &BenchReport) -> String {
    let mut out = String::from("k,eps,m,median_secs,pieces\n");
    for r in &report.rows {
        let _ = writeln!(
            out,
            "{},{},{},{:.6},{}",
            r.k, r.eps, r.m, r.median_secs, r.pieces
        );
    }
    out
}

/// Each cell is timed on one thread so cells compare fairly.
fn timed_grid(cells: &[BenchCell], reps: usize, seed: u64) -> Result<BenchReport> {
    #[cfg(feature = "parallel")]
    {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .context("cannot build the timing pool")?;
        Ok(pool.install(|| run_grid(cells, reps, seed))?)
    }
    #[cfg(not(feature = "parallel"))]
    {
        Ok(run_grid(cells, reps, seed)?)
    }
}

pub fn bench(args: &BenchArgs, common: Common) -> Result<()> {
    if args.k.contains(&0) || args.m.contains(&0) {
        bail!("--k and --m values must be positive");
    }
    let mut cells = Vec::new();
    for &k in &args.k {
        for &eps in &args.eps {
            for &m in &args.m {
                cells.push(BenchCell { k, eps, m });
            }
        }
    }
    let report = timed_grid(&cells, args.reps as usize, common.seed)?;
    let csv = bench_csv(&report);
    if let Some(path) = &args.csv {
        fs::write(path, &csv).with_context(|| format!("cannot write {}", path.display()))?;
    }
    match report.slope {
        Some(s) => eprintln!("log-log slope of time against m: {s:.3}"),
        None => eprintln!("log-log slope needs at least two m values"),
    }
    if common.json {
        print_json(&report)?;
    } else {
        print!("{csv}");
    }
    if let (Some(limit), Some(slope)) = (args.max_slope, report.slope) {
        if slope > limit {
            bail!("slope {slope:.3} exceeds {limit}");
        }
    }
    Ok(())
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rule {
    Collision,
    Learner,
}

#[derive(Args, Debug)]
pub struct LowerboundArgs {
    /// Half the domain size; the ensemble lives on 2N points.
    #[arg(long = "N", value_name = "N")]
    pub n: usize,
    /// Fraction of each half that is perturbed; t·N must be an integer.
    #[arg(long, required_unless_present = "floor")]
    pub t: Option<f64>,
    /// Draws per trial.
    #[arg(long)]
    pub m: usize,
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    #[arg(long, value_enum, default_value_t = Rule::Collision)]
    pub distinguisher: Rule,
    /// Slack δ of the learner rule, which runs at ε = δ³/(12(2+δ)).
    #[arg(long, default_value_t = 0.5, value_parser = open_unit)]
    pub delta: f64,
    /// Run the learner rule at t = δ/(2+δ) and report its errors.
    #[arg(long, conflicts_with_all = ["t", "distinguisher"])]
    pub floor: bool,
    /// Write per-trial statistics as CSV here.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

fn trials_csv(report: &LabReport) -> String {
    let mut out = String::from("regime,trial,statistic,says_nonuniform,repeated,draws\n");
    for r in &report.records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.regime, r.trial, r.statistic, r.says_nonuniform, r.repeated, r.draws
        );
    }
    out
}

pub fn lowerbound(args: &LowerboundArgs, common: Common) -> Result<()> {
    if args.floor {
        let report = agnostic_floor_demo(args.n, args.delta, args.m, args.trials, common.seed)?;
        if let Some(path) = &args.csv {
            fs::write(path, trials_csv(&report.lab))
                .with_context(|| format!("cannot write {}", path.display()))?;
        }
        if common.json {
            return print_json(&report);
        }
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        println!(
            "t {:.6}, eps {:.6}, analytic gap {:.6}",
            report.t, report.eps, report.analytic_gap
        );
        println!(
            "mean error under uniform {:.6}, under hard {:.6}",
            mean(&report.uniform_errors),
            mean(&report.hard_errors)
        );
        println!("advantage {:.4}", report.advantage);
        return Ok(());
    }
    let config = LabConfig {
        n: args.n,
        t: args.t.expect("clap requires --t without --floor"),
        m: args.m,
        trials: args.trials,
        distinguisher: match args.distinguisher {
            Rule::Collision => Distinguisher::Collision,
            Rule::Learner => Distinguisher::Learner { delta: args.delta },
        },
        seed: common.seed,
    };
    let report = distinguishing_experiment(&config)?;
    if let Some(path) = &args.csv {
        fs::write(path, trials_csv(&report))
            .with_context(|| format!("cannot write {}", path.display()))?;
    }
    if common.json {
        return print_json(&report);
    }
    println!(
        "says non-uniform: uniform {:.4}, hard {:.4}, advantage {:.4}",
        report.uniform_rate, report.hard_rate, report.advantage
    );
    println!(
        "trials with a repeated value: uniform {:.4}, hard {:.4}",
        report.repeat_rate("uniform"),
        report.repeat_rate("hard")
    );
    Ok(())
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    /// Target spec.
    #[arg(long)]
    pub target: String,
    /// Number of draws.
    #[arg(long)]
    pub m: usize,
    /// Sample file to write; text samples go to stdout without it.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Text, requires = "output")]
    pub format: Format,
    /// Write the target's metadata as JSON here.
    #[arg(long)]
    pub meta: Option<PathBuf>,
}

#[derive(Serialize)]
struct SynthReport<'a> {
    spec: String,
    m: usize,
    output: Option<String>,
    meta: &'a TargetMeta,
}

pub fn synth(args: &SynthArgs, common: Common) -> Result<()> {
    if common.json && args.output.is_none() {
        bail!("--json needs --output, since the samples would share stdout");
    }
    let target = generate(&args.target, common.seed)?;
    let points = TargetSource::new(target.target.clone(), common.seed).draw(args.m)?;
    if let Some(path) = &args.meta {
        write_json(path, &target.meta)?;
    }
    match &args.output {
        Some(path) => {
            let format = match args.format {
                Format::Text => SampleFormat::Text,
                Format::Binary => SampleFormat::Binary,
            };
            write_samples(path, &points, format)?;
        }
        None => {
            let mut out = String::with_capacity(points.len() * 24);
            for &x in &points {
                out.push_str(&format_sample(x));
                out.push('\n');
            }
            print!("{out}");
        }
    }
    if common.json {
        print_json(&SynthReport {
            spec: target.spec.to_string(),
            m: args.m,
            output: args.output.as_ref().map(|p| p.display().to_string()),
            meta: &target.meta,
        })?;
    }
    Ok(())
}
