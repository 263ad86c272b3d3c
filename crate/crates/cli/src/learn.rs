//! `learn` and `select`.

use std::path::PathBuf;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::Args;
use histloom::merge::MergeState;
use histloom::sample_io::read_samples;
use histloom::selection::{CandidateLabel, ScheffeConfig};
use histloom::source::{Binning, CountingSource};
use histloom::{
    agnostic_learn, learn_wb, learn_with_atoms, learner_trace, scheffe_select, AgnosticConfig,
    CandidatePool, LearnerConfig, MixedDistribution, PiecewiseDensity, SampleSource, TargetSource,
    VecSource,
};
use serde::Serialize;

use crate::io::{generate, print_json, read_pool, to_json, write_json};
use crate::{Common, SampleInput};

pub fn open_unit(s: &str) -> Result<f64, String> {
    let x: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if x > 0.0 && x < 1.0 {
        Ok(x)
    } else {
        Err(format!("{x} is not in (0, 1)"))
    }
}

pub fn positive(s: &str) -> Result<f64, String> {
    let x: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if x > 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(format!("{x} is not positive"))
    }
}

#[derive(Args, Debug)]
pub struct LearnArgs {
    #[command(flatten)]
    pub sample: SampleInput,
    /// Number of histogram pieces to compete with.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub k: u64,
    /// Accuracy in L1.
    #[arg(long, value_parser = open_unit)]
    pub eps: f64,
    /// Skip heavy-atom detection and run the agnostic learner directly.
    #[arg(long)]
    pub assume_well_behaved: bool,
    /// Run a single merging-learner pass (needs --assume-well-behaved).
    #[arg(long, requires = "assume_well_behaved")]
    pub assume_small_opt: bool,
    /// Empirical sample size of the single pass.
    #[arg(long, requires = "assume_small_opt", value_parser = clap::value_parser!(u64).range(1..))]
    pub m: Option<u64>,
    /// Write every merge state of the single pass to this file.
    #[arg(long, requires = "assume_small_opt")]
    pub trace: Option<PathBuf>,
    /// Write the agnostic learner's candidate pool to this file.
    #[arg(long, conflicts_with = "assume_small_opt")]
    pub pool: Option<PathBuf>,
    /// Write the hypothesis here instead of stdout.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Learner runs per rung of the guess ladder.
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u64).range(1..))]
    pub repetitions: u64,
    /// Partition sample constant.
    #[arg(long, value_parser = positive)]
    pub c0: Option<f64>,
    /// Empirical sample constant.
    #[arg(long, value_parser = positive)]
    pub c1: Option<f64>,
    /// Tournament sample constant.
    #[arg(long, value_parser = positive)]
    pub c3: Option<f64>,
}

#[derive(Serialize, Clone, Copy, Debug, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
enum Mode {
    Atoms,
    Agnostic,
    SinglePass,
}

/// What `learn` produced: a density, or a mixture when atoms were split off.
#[derive(Serialize)]
#[serde(untagged)]
enum Hypothesis {
    Density(PiecewiseDensity),
    Mixture(MixedDistribution),
}

#[derive(Serialize)]
struct LearnReport {
    mode: Mode,
    k: u64,
    eps: f64,
    seed: u64,
    source: String,
    pieces: usize,
    atoms: usize,
    draws: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    winner: Option<CandidateLabel>,
    #[serde(skip_serializing_if = "Option::is_none")]
    acceptance: Option<f64>,
    hypothesis: Hypothesis,
}

#[derive(Serialize)]
struct TraceFile<'a> {
    states: &'a [MergeState],
    unfrozen: &'a [usize],
    sizes: &'a [usize],
}

pub(crate) struct Learned {
    hypothesis: Hypothesis,
    pieces: usize,
    atoms: usize,
    winner: Option<CandidateLabel>,
    acceptance: Option<f64>,
}

fn mode_of(args: &LearnArgs) -> Mode {
    if args.assume_small_opt {
        Mode::SinglePass
    } else if args.assume_well_behaved {
        Mode::Agnostic
    } else {
        Mode::Atoms
    }
}

fn agnostic_config(args: &LearnArgs) -> Result<AgnosticConfig> {
    let mut cfg = AgnosticConfig::new(args.k as usize, args.eps)?;
    cfg.repetitions = args.repetitions as usize;
    if let Some(c) = args.c0 {
        cfg.c0 = c;
    }
    if let Some(c) = args.c1 {
        cfg.c1 = c;
    }
    if let Some(c) = args.c3 {
        cfg.c3 = c;
    }
    Ok(cfg)
}

fn run_learner<S>(args: &LearnArgs, src: &mut S) -> Result<Learned>
where
    S: SampleSource + Send + Sync,
{
    match mode_of(args) {
        Mode::SinglePass => {
            let mut cfg = LearnerConfig::new(args.k as usize, args.eps)?;
            if let Some(c) = args.c0 {
                cfg.c0 = c;
            }
            if let Some(c) = args.c1 {
                cfg.c1 = c;
            }
            if let Some(m) = args.m {
                cfg = cfg.with_sample_budget(m as usize);
            }
            let out = match &args.trace {
                Some(path) => {
                    let trace = learner_trace(&cfg, src)?;
                    write_json(
                        path,
                        &TraceFile {
                            states: &trace.states,
                            unfrozen: &trace.outcome.unfrozen,
                            sizes: &trace.outcome.sizes,
                        },
                    )?;
                    trace.outcome
                }
                None => learn_wb(&cfg, src)?,
            };
            Ok(Learned {
                pieces: out.hypothesis.pieces(),
                hypothesis: Hypothesis::Density(out.hypothesis),
                atoms: 0,
                winner: None,
                acceptance: None,
            })
        }
        Mode::Agnostic => {
            let out = agnostic_learn(&agnostic_config(args)?, src)?;
            if let Some(path) = &args.pool {
                write_json(path, &out.pool)?;
            }
            Ok(Learned {
                pieces: out.hypothesis.pieces(),
                winner: out.winner_label(),
                hypothesis: Hypothesis::Density(out.hypothesis),
                atoms: 0,
                acceptance: None,
            })
        }
        Mode::Atoms => {
            let out = learn_with_atoms(&agnostic_config(args)?, src)?;
            if let (Some(path), Some(agnostic)) = (&args.pool, &out.agnostic) {
                write_json(path, &agnostic.pool)?;
            }
            Ok(Learned {
                pieces: out.mixture.histogram().pieces(),
                atoms: out.mixture.atoms().len(),
                winner: out.agnostic.as_ref().and_then(|a| a.winner_label()),
                acceptance: out.acceptance,
                hypothesis: Hypothesis::Mixture(out.mixture),
            })
        }
    }
}

/// Runs `f` on a counting wrapper around the requested sample source and
/// returns its result with the number of draws and a label for the source.
pub(crate) fn with_source<T>(
    input: &SampleInput,
    seed: u64,
    f: impl FnOnce(&mut dyn Sampler) -> Result<T>,
) -> Result<(T, u64, String)> {
    if let Some(path) = &input.input {
        let points = read_samples(path).with_context(|| format!("reading {}", path.display()))?;
        let mut src = CountingSource::new(VecSource::new(points)?);
        let out = f(&mut src)?;
        Ok((out, src.ledger().total_draws(), path.display().to_string()))
    } else {
        let spec = input
            .target
            .as_deref()
            .expect("clap requires --input or --target");
        let target = generate(spec, seed)?;
        let label = target.spec.to_string();
        let inner = TargetSource::new(target.target, seed).with_binning(Binning::Multinomial);
        let mut src = CountingSource::new(inner);
        let out = f(&mut src)?;
        Ok((out, src.ledger().total_draws(), label))
    }
}

/// Object-safe view of the sources `with_source` builds.
pub(crate) trait Sampler {
    fn learn(&mut self, args: &LearnArgs) -> Result<Learned>;
    fn select(
        &mut self,
        pool: &CandidatePool,
        cfg: &ScheffeConfig,
    ) -> Result<histloom::selection::ScheffeOutcome>;
}

impl<S: SampleSource + Send + Sync> Sampler for CountingSource<S> {
    fn learn(&mut self, args: &LearnArgs) -> Result<Learned> {
        run_learner(args, self)
    }

    fn select(
        &mut self,
        pool: &CandidatePool,
        cfg: &ScheffeConfig,
    ) -> Result<histloom::selection::ScheffeOutcome> {
        Ok(scheffe_select(pool, self, cfg)?)
    }
}

pub fn learn(args: &LearnArgs, common: Common) -> Result<()> {
    let start = Instant::now();
    let (learned, draws, source) = with_source(&args.sample, common.seed, |src| src.learn(args))?;
    eprintln!(
        "draws {draws}, pieces {}, atoms {}, {:.3}s",
        learned.pieces,
        learned.atoms,
        start.elapsed().as_secs_f64()
    );
    if let Some(path) = &args.output {
        write_json(path, &learned.hypothesis)?;
    }
    let report = LearnReport {
        mode: mode_of(args),
        k: args.k,
        eps: args.eps,
        seed: common.seed,
        source,
        pieces: learned.pieces,
        atoms: learned.atoms,
        draws,
        winner: learned.winner,
        acceptance: learned.acceptance,
        hypothesis: learned.hypothesis,
    };
    if common.json {
        print_json(&report)
    } else if args.output.is_none() {
        println!("{}", to_json(&report.hypothesis)?);
        Ok(())
    } else {
        println!(
            "{} pieces, {} atoms, {draws} draws",
            report.pieces, report.atoms
        );
        Ok(())
    }
}

#[derive(Args, Debug)]
pub struct SelectArgs {
    #[command(flatten)]
    pub sample: SampleInput,
    /// Candidate pool: a JSON array of densities or a file from `learn --pool`.
    #[arg(long)]
    pub pool: PathBuf,
    #[arg(long, value_parser = open_unit)]
    pub eps: f64,
    /// Failure probability of the tournament.
    #[arg(long, default_value_t = 0.05, value_parser = open_unit)]
    pub delta: f64,
    /// Write the winning density here.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Serialize)]
struct SelectReport {
    candidates: usize,
    winner: usize,
    wins: Vec<usize>,
    draws: u64,
    hypothesis: PiecewiseDensity,
}

pub fn select(args: &SelectArgs, common: Common) -> Result<()> {
    let hypotheses = read_pool(&args.pool)?;
    let pool = CandidatePool::new(hypotheses)?;
    let cfg = ScheffeConfig::new(args.eps, args.delta)?;
    let start = Instant::now();
    let (out, draws, _) = with_source(&args.sample, common.seed, |src| src.select(&pool, &cfg))?;
    eprintln!("draws {draws}, {:.3}s", start.elapsed().as_secs_f64());
    let hypothesis = pool.hypotheses()[out.winner].clone();
    if let Some(path) = &args.output {
        write_json(path, &hypothesis)?;
    }
    let report = SelectReport {
        candidates: pool.len(),
        winner: out.winner,
        wins: out.wins,
        draws,
        hypothesis,
    };
    if common.json {
        print_json(&report)
    } else {
        println!(
            "winner {} of {} with {} wins, {draws} draws",
            report.winner, report.candidates, report.wins[report.winner]
        );
        Ok(())
    }
}
