//! `eval` and the `oracle` subcommands.

use std::path::{Path, PathBuf};

use anyhow::{bail, Result};
use clap::{Args, Subcommand};
use histloom::oracles::{a_ell_distance, a_ell_distance_empirical, opt_k_exact, OptKResult};
use histloom::sample_io::read_samples;
use histloom::EmpiricalSample;
use serde::Serialize;

use crate::io::{density_arg, generate, print_json, read_hypothesis, target_as_mixture};
use crate::Common;

#[derive(Args, Debug)]
pub struct EvalArgs {
    /// Hypothesis file written by `learn` or `select`.
    #[arg(long)]
    pub hypothesis: PathBuf,
    /// Target spec to compare against.
    #[arg(long, conflicts_with = "against", required_unless_present = "against")]
    pub target: Option<String>,
    /// Second hypothesis file to compare against.
    #[arg(long)]
    pub against: Option<PathBuf>,
    /// Numbers of intervals for the A_ell distance.
    #[arg(long, value_delimiter = ',')]
    pub ell: Vec<usize>,
}

#[derive(Serialize)]
struct AEll {
    ell: usize,
    value: f64,
}

#[derive(Serialize)]
struct EvalReport {
    l1: f64,
    tv: f64,
    a_ell: Vec<AEll>,
    /// Certified bound on the target's `opt_k`, from its construction.
    #[serde(skip_serializing_if = "Option::is_none")]
    opt_k_upper: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pieces_of_target: Option<usize>,
}

pub fn eval(args: &EvalArgs, common: Common) -> Result<()> {
    let h = read_hypothesis(&args.hypothesis)?;
    let (other, opt_k_upper, pieces_of_target) = match (&args.target, &args.against) {
        (Some(spec), _) => {
            let target = generate(spec, common.seed)?;
            (
                target_as_mixture(&target)?,
                target.meta.opt_k_upper,
                target.meta.pieces,
            )
        }
        (None, Some(path)) => (read_hypothesis(path)?, None, None),
        (None, None) => unreachable!("clap requires one of them"),
    };
    let l1 = h.l1_distance(&other);
    let mut a_ell = Vec::new();
    if !args.ell.is_empty() {
        if !h.atoms().is_empty() || !other.atoms().is_empty() {
            bail!("A_ell distances need two atomless distributions");
        }
        for &ell in &args.ell {
            if ell == 0 {
                bail!("--ell values must be positive");
            }
            a_ell.push(AEll {
                ell,
                value: a_ell_distance(h.histogram(), other.histogram(), ell),
            });
        }
    }
    let report = EvalReport {
        l1,
        tv: l1 / 2.0,
        a_ell,
        opt_k_upper,
        pieces_of_target,
    };
    if common.json {
        return print_json(&report);
    }
    println!("l1 {:.6}", report.l1);
    println!("tv {:.6}", report.tv);
    for a in &report.a_ell {
        println!("a_{} {:.6}", a.ell, a.value);
    }
    if let Some(eta) = report.opt_k_upper {
        println!("target opt_k <= {eta:.6} (certified)");
    }
    Ok(())
}

#[derive(Subcommand, Debug)]
pub enum OracleCommand {
    /// Bracket opt_k of a piecewise-constant density by dynamic programming.
    Optk(OptkArgs),
    /// A_ell distance between two densities, or a density and a sample.
    Adist(AdistArgs),
}

#[derive(Args, Debug)]
pub struct OptkArgs {
    /// Density JSON file or target spec.
    #[arg(long)]
    pub density: String,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub k: u64,
}

#[derive(Serialize)]
struct OptkReport {
    k: u64,
    lower: f64,
    upper: f64,
    lower_tv: f64,
    upper_tv: f64,
    breakpoints_of_q: Vec<f64>,
    argmin: histloom::PiecewiseDensity,
}

impl OptkReport {
    fn new(k: u64, r: OptKResult) -> Self {
        Self {
            k,
            lower: r.lower,
            upper: r.upper,
            lower_tv: r.lower_tv(),
            upper_tv: r.upper_tv(),
            breakpoints_of_q: r.breakpoints_of_q,
            argmin: r.argmin,
        }
    }
}

#[derive(Args, Debug)]
pub struct AdistArgs {
    /// First density: JSON file or target spec.
    #[arg(long)]
    pub f: String,
    /// Second density: JSON file or target spec.
    #[arg(long, conflicts_with = "input", required_unless_present = "input")]
    pub g: Option<String>,
    /// Sample file whose empirical distribution replaces `g`.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub ell: u64,
}

#[derive(Serialize)]
struct AdistReport {
    ell: u64,
    value: f64,
    empirical: bool,
}

fn empirical(path: &Path) -> Result<EmpiricalSample> {
    Ok(EmpiricalSample::new(read_samples(path)?)?)
}

pub fn oracle(cmd: &OracleCommand, common: Common) -> Result<()> {
    match cmd {
        OracleCommand::Optk(args) => {
            let p = density_arg(&args.density, common.seed)?;
            let report = OptkReport::new(args.k, opt_k_exact(&p, args.k as usize)?);
            if common.json {
                return print_json(&report);
            }
            println!(
                "opt_{} in [{:.6}, {:.6}] (L1)",
                report.k, report.lower, report.upper
            );
            println!("breakpoints {:?}", report.breakpoints_of_q);
            Ok(())
        }
        OracleCommand::Adist(args) => {
            let f = density_arg(&args.f, common.seed)?;
            let ell = args.ell as usize;
            let (value, empirical) = match (&args.g, &args.input) {
                (Some(g), _) => (
                    a_ell_distance(&f, &density_arg(g, common.seed)?, ell),
                    false,
                ),
                (None, Some(path)) => (a_ell_distance_empirical(&f, &empirical(path)?, ell), true),
                (None, None) => unreachable!("clap requires one of them"),
            };
            let report = AdistReport {
                ell: args.ell,
                value,
                empirical,
            };
            if common.json {
                return print_json(&report);
            }
            println!("a_{} {:.6}", report.ell, report.value);
            Ok(())
        }
    }
}
