//! Hypothesis selection and the reduction to the small-`opt_k` regime.
//!
//! [`agnostic_learn`] does not know `opt_k(p)`, so it runs the merging
//! learner at a ladder of guesses `g_i = (ε/10)·2^{i−1}`, several times per
//! guess, and lets a Scheffé tournament pick the final hypothesis.

use serde::{Deserialize, Serialize};

use crate::density::{for_each_common_piece, Interval, PiecewiseDensity};
use crate::error::{check_open_unit, check_positive_count, Error, Result};
use crate::merge::{learn_wb, LearnOutcome, LearnerConfig, DEFAULT_C1};
use crate::partition::DEFAULT_C0;
use crate::source::SampleSource;

/// Default sample constant of the tournament.
pub const DEFAULT_C3: f64 = 4.0;
/// Default learner repetitions per guess.
pub const DEFAULT_REPETITIONS: usize = 3;
/// Failure probability given to the tournament by [`agnostic_learn`].
pub const AGNOSTIC_DELTA: f64 = 1.0 / 40.0;

const STAGE1_TAG: u64 = 0x5354_4731;

/// Which ladder run produced a candidate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CandidateLabel {
    /// Zero-based rung.
    pub guess_index: usize,
    pub repetition: usize,
    pub guess: f64,
}

/// A nonempty list of full-distribution candidates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CandidatePool {
    hypotheses: Vec<PiecewiseDensity>,
    labels: Vec<Option<CandidateLabel>>,
}

impl CandidatePool {
    pub fn new(hypotheses: Vec<PiecewiseDensity>) -> Result<Self> {
        if hypotheses.is_empty() {
            return Err(Error::EmptyPool);
        }
        for h in &hypotheses {
            h.require_full()?;
        }
        let labels = vec![None; hypotheses.len()];
        Ok(Self { hypotheses, labels })
    }

    pub fn labelled(
        hypotheses: Vec<PiecewiseDensity>,
        labels: Vec<CandidateLabel>,
    ) -> Result<Self> {
        if labels.len() != hypotheses.len() {
            return Err(Error::Contract(
                "one label per candidate is required".into(),
            ));
        }
        let mut pool = Self::new(hypotheses)?;
        pool.labels = labels.into_iter().map(Some).collect();
        Ok(pool)
    }

    pub fn len(&self) -> usize {
        self.hypotheses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hypotheses.is_empty()
    }

    pub fn hypotheses(&self) -> &[PiecewiseDensity] {
        &self.hypotheses
    }

    pub fn label(&self, i: usize) -> Option<CandidateLabel> {
        self.labels[i]
    }
}

/// The Scheffé set `{x : f(x) > g(x)}` as sorted, non-adjacent intervals.
pub fn scheffe_set(f: &PiecewiseDensity, g: &PiecewiseDensity) -> Vec<Interval> {
    let mut out: Vec<(f64, f64)> = Vec::new();
    for_each_common_piece(f, g, |lo, hi, a, b| {
        if a > b {
            match out.last_mut() {
                Some(last) if last.1 == lo => last.1 = hi,
                _ => out.push((lo, hi)),
            }
        }
    });
    out.into_iter()
        .map(|(lo, hi)| Interval::new(lo, hi).expect("refinement pieces are nonempty"))
        .collect()
}

/// Tournament parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScheffeConfig {
    pub eps: f64,
    pub delta: f64,
    pub c3: f64,
}

impl ScheffeConfig {
    pub fn new(eps: f64, delta: f64) -> Result<Self> {
        check_open_unit("eps", eps)?;
        check_open_unit("delta", delta)?;
        Ok(Self {
            eps,
            delta,
            c3: DEFAULT_C3,
        })
    }

    /// Sample size `⌈C₃ (1/ε²)(ln N + ln(1/δ))⌉` for a pool of `n`.
    pub fn sample_size(&self, n: usize) -> usize {
        let s = self.c3 / (self.eps * self.eps) * ((n as f64).ln() + (1.0 / self.delta).ln());
        (s.ceil() as usize).max(1)
    }
}

/// Outcome of a tournament.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScheffeOutcome {
    pub winner: usize,
    /// Pairwise wins of every candidate.
    pub wins: Vec<usize>,
    pub draws: usize,
}

/// Pairwise-win Scheffé tournament.
///
/// For every ordered pair `(i, j)`, `i` beats `j` when on `A = {p_i > p_j}`
/// the exact mass `p_i(A)` is at least as close to the empirical mass
/// `p̂(A)` as `p_j(A)` is. The candidate with most wins is returned, the
/// lowest index among ties.
pub fn scheffe_select<S: SampleSource + ?Sized>(
    pool: &CandidatePool,
    draws: &mut S,
    config: &ScheffeConfig,
) -> Result<ScheffeOutcome> {
    check_open_unit("eps", config.eps)?;
    check_open_unit("delta", config.delta)?;
    let n = pool.len();
    if n == 1 {
        return Ok(ScheffeOutcome {
            winner: 0,
            wins: vec![0],
            draws: 0,
        });
    }
    let mut cuts: Vec<f64> = pool
        .hypotheses
        .iter()
        .flat_map(|h| h.breakpoints().iter().copied())
        .collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let s = config.sample_size(n);
    let counts = draws.draw_binned(s, &cuts)?;
    let mut prefix = Vec::with_capacity(cuts.len());
    prefix.push(0u64);
    for c in &counts {
        prefix.push(prefix.last().unwrap() + c);
    }
    let total = *prefix.last().unwrap();
    if total == 0 {
        return Err(Error::SampleExhausted {
            requested: s,
            available: 0,
        });
    }
    let empirical = |lo: f64, hi: f64| {
        let a = cuts.partition_point(|&c| c < lo);
        let b = cuts.partition_point(|&c| c < hi);
        (prefix[b] - prefix[a]) as f64 / total as f64
    };

    let hs = &pool.hypotheses;
    let wins = crate::par::map_indexed(n, |i| {
        (0..n)
            .filter(|&j| j != i)
            .filter(|&j| {
                let (mut pi, mut pj, mut ph) = (0.0, 0.0, 0.0);
                for_each_common_piece(&hs[i], &hs[j], |lo, hi, a, b| {
                    if a > b {
                        pi += a * (hi - lo);
                        pj += b * (hi - lo);
                        ph += empirical(lo, hi);
                    }
                });
                (pi - ph).abs() <= (pj - ph).abs()
            })
            .count()
    });
    let mut winner = 0;
    for i in 1..n {
        if wins[i] > wins[winner] {
            winner = i;
        }
    }
    Ok(ScheffeOutcome {
        winner,
        wins,
        draws: total as usize,
    })
}

/// The guesses `(ε/10)·2^{i−1}`, `i = 1, …, ⌈log₂(20/ε)⌉`.
pub fn guess_ladder(eps: f64) -> Vec<f64> {
    let rungs = (20.0 / eps).log2().ceil() as usize;
    (0..rungs)
        .map(|i| eps / 10.0 * 2f64.powi(i as i32))
        .collect()
}

/// Parameters of [`agnostic_learn`].
#[derive(Debug, Clone, PartialEq)]
pub struct AgnosticConfig {
    pub k: usize,
    pub eps: f64,
    pub repetitions: usize,
    pub c0: f64,
    pub c1: f64,
    pub c3: f64,
}

impl AgnosticConfig {
    pub fn new(k: usize, eps: f64) -> Result<Self> {
        let cfg = Self {
            k,
            eps,
            repetitions: DEFAULT_REPETITIONS,
            c0: DEFAULT_C0,
            c1: DEFAULT_C1,
            c3: DEFAULT_C3,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        check_positive_count("k", self.k)?;
        check_open_unit("eps", self.eps)?;
        check_positive_count("repetitions", self.repetitions)?;
        Ok(())
    }

    pub fn ladder(&self) -> Vec<f64> {
        guess_ladder(self.eps)
    }

    pub fn learner(&self, guess: f64) -> LearnerConfig {
        LearnerConfig::for_guess(self.k, guess, self.c0, self.c1)
    }

    pub fn scheffe(&self) -> ScheffeConfig {
        ScheffeConfig {
            eps: self.eps / 10.0,
            delta: AGNOSTIC_DELTA,
            c3: self.c3,
        }
    }

    /// Upper bound on the draws of one call: every ladder run plus the
    /// tournament.
    pub fn draw_budget(&self) -> usize {
        let runs: usize = self
            .ladder()
            .iter()
            .map(|&g| {
                let c = self.learner(g);
                c.budget() + c.partition_budget()
            })
            .sum();
        let n = self.ladder().len() * self.repetitions;
        runs * self.repetitions + self.scheffe().sample_size(n)
    }
}

/// Result of [`agnostic_learn`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AgnosticOutcome {
    pub hypothesis: PiecewiseDensity,
    pub winner: usize,
    pub pool: CandidatePool,
    pub runs: Vec<LearnOutcome>,
    pub scheffe: ScheffeOutcome,
}

impl AgnosticOutcome {
    pub fn winner_label(&self) -> Option<CandidateLabel> {
        self.pool.label(self.winner)
    }
}

/// Semi-agnostic learner: guess ladder followed by a tournament.
///
/// When the source can fork, ladder runs draw from independent child
/// streams, one per `(guess, repetition)`, and may run in parallel; the
/// tournament then draws from `draws` itself. Otherwise everything is drawn
/// sequentially from `draws`.
pub fn agnostic_learn<S>(config: &AgnosticConfig, draws: &mut S) -> Result<AgnosticOutcome>
where
    S: SampleSource + Send + Sync,
{
    config.validate()?;
    let ladder = config.ladder();
    let r = config.repetitions;
    let jobs = ladder.len() * r;
    let runs: Vec<LearnOutcome> = if draws.fork(0).is_some() {
        let base: &S = draws;
        crate::par::try_map_indexed(jobs, |job| {
            let (g, rep) = (job / r, job % r);
            let stream = crate::seed::split_seed(STAGE1_TAG, &[g as u64, rep as u64]);
            let mut child = base.fork(stream).expect("source forked before");
            learn_wb(&config.learner(ladder[g]), &mut child)
        })?
    } else {
        (0..jobs)
            .map(|job| learn_wb(&config.learner(ladder[job / r]), draws))
            .collect::<Result<_>>()?
    };
    let labels = (0..jobs)
        .map(|job| CandidateLabel {
            guess_index: job / r,
            repetition: job % r,
            guess: ladder[job / r],
        })
        .collect();
    let pool =
        CandidatePool::labelled(runs.iter().map(|o| o.hypothesis.clone()).collect(), labels)?;
    let scheffe = scheffe_select(&pool, draws, &config.scheffe())?;
    Ok(AgnosticOutcome {
        hypothesis: pool.hypotheses[scheffe.winner].clone(),
        winner: scheffe.winner,
        pool,
        runs,
        scheffe,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::{l1_distance, Measure};
    use crate::source::{Binning, TargetSource, VecSource};

    #[test]
    fn ladder_for_tenth() {
        let l = guess_ladder(0.1);
        assert_eq!(l.len(), 8);
        assert!((l[0] - 0.01).abs() < 1e-15);
        assert!((l[7] - 1.28).abs() < 1e-12);
    }

    #[test]
    fn scheffe_identity() {
        let f = PiecewiseDensity::step(&[0.3, 0.7], &[0.5, 1.9375, 0.25]).unwrap();
        let g = PiecewiseDensity::step(&[0.5], &[1.5, 0.5]).unwrap();
        let a = scheffe_set(&f, &g);
        let diff: f64 = a.iter().map(|iv| f.mass_on(iv) - g.mass_on(iv)).sum();
        assert!((diff - l1_distance(&f, &g) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn single_candidate_draws_nothing() {
        let pool = CandidatePool::new(vec![PiecewiseDensity::uniform()]).unwrap();
        let mut src = VecSource::new(vec![]).unwrap();
        let out =
            scheffe_select(&pool, &mut src, &ScheffeConfig::new(0.05, 0.05).unwrap()).unwrap();
        assert_eq!((out.winner, out.draws), (0, 0));
    }

    #[test]
    fn empty_and_partial_pools_rejected() {
        assert_eq!(CandidatePool::new(vec![]), Err(Error::EmptyPool));
        let half = PiecewiseDensity::step(&[0.5], &[1.0, 0.0]).unwrap();
        assert!(matches!(
            CandidatePool::new(vec![half]),
            Err(Error::NotADistribution { .. })
        ));
    }

    #[test]
    fn picks_the_target() {
        let u = PiecewiseDensity::uniform();
        let skew = PiecewiseDensity::step(&[0.5], &[2.0, 0.0]).unwrap();
        let pool = CandidatePool::new(vec![skew, u.clone()]).unwrap();
        let cfg = ScheffeConfig::new(0.05, 0.05).unwrap();
        let mut src = TargetSource::new(&u, 2).with_binning(Binning::Multinomial);
        assert_eq!(scheffe_select(&pool, &mut src, &cfg).unwrap().winner, 1);
    }
}
