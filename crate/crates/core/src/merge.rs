//! The merging learner for well-behaved targets with small `opt_k`.
//!
//! Starting from a fine partition whose intervals each carry mass about
//! `ε′/(6k)`, the learner draws one empirical sample and then repeatedly
//! pairs up neighbouring intervals. A pair whose merge would cost more than
//! `ε′/(2k)` in L1 (measured on the empirical distribution) is frozen and
//! kept forever; everything else merges. After `s = ⌈log₂(1/ε′)⌉` passes the
//! hypothesis is the empirical flattening on the surviving partition.

use serde::{Deserialize, Serialize};

use crate::density::{alpha_from_masses, flatten, Interval, Measure, PiecewiseDensity};
use crate::error::{check_open_unit, check_positive_count, Error, Result};
use crate::partition::{approx_equal_partition_with, learner_kappa, DEFAULT_C0};
use crate::source::SampleSource;

/// Default sample-budget constant.
pub const DEFAULT_C1: f64 = 8.0;
/// Default constant of the piece-count bound `C₂ · k · log₂²(1/ε)`.
pub const DEFAULT_C2: f64 = 64.0;

/// `ε′ = ε / log₂(1/ε)`. The logarithm is floored at 1 so that coarse
/// guesses (`ε ≥ 1/2`) keep `ε′ = ε`.
pub fn eps_prime(eps: f64) -> f64 {
    eps / (1.0 / eps).log2().max(1.0)
}

/// Parameters of one learner run.
#[derive(Debug, Clone, PartialEq)]
pub struct LearnerConfig {
    pub k: usize,
    pub eps: f64,
    /// Overrides the default empirical sample size.
    pub sample_budget: Option<usize>,
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
    coarse: bool,
}

impl LearnerConfig {
    pub fn new(k: usize, eps: f64) -> Result<Self> {
        let cfg = Self {
            k,
            eps,
            sample_budget: None,
            c0: DEFAULT_C0,
            c1: DEFAULT_C1,
            c2: DEFAULT_C2,
            coarse: false,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// A run at a rung of the guess ladder, where `eps` may exceed 1.
    pub(crate) fn for_guess(k: usize, guess: f64, c0: f64, c1: f64) -> Self {
        Self {
            k,
            eps: guess,
            sample_budget: None,
            c0,
            c1,
            c2: DEFAULT_C2,
            coarse: true,
        }
    }

    pub fn with_sample_budget(mut self, m: usize) -> Self {
        self.sample_budget = Some(m);
        self
    }

    pub fn validate(&self) -> Result<()> {
        check_positive_count("k", self.k)?;
        if self.coarse {
            if !(self.eps > 0.0 && self.eps.is_finite()) {
                return Err(Error::InvalidParameter {
                    name: "eps",
                    value: self.eps,
                    expected: "a positive guess",
                });
            }
        } else {
            check_open_unit("eps", self.eps)?;
        }
        if let Some(m) = self.sample_budget {
            check_positive_count("m", m)?;
        }
        for (name, c) in [("c0", self.c0), ("c1", self.c1), ("c2", self.c2)] {
            if !(c > 0.0 && c.is_finite()) {
                return Err(Error::InvalidParameter {
                    name,
                    value: c,
                    expected: "a positive constant",
                });
            }
        }
        Ok(())
    }

    pub fn eps_prime(&self) -> f64 {
        eps_prime(self.eps)
    }

    /// Number of merge passes `s = ⌈log₂(1/ε′)⌉`, zero when `ε′ ≥ 1`.
    pub fn iterations(&self) -> usize {
        (1.0 / self.eps_prime()).log2().ceil().max(0.0) as usize
    }

    /// Freezing threshold `ε′/(2k)`.
    pub fn threshold(&self) -> f64 {
        self.eps_prime() / (2.0 * self.k as f64)
    }

    /// Target interval mass of the initial partition, `ε′/(6k)`.
    pub fn kappa(&self) -> f64 {
        learner_kappa(self.k, self.eps_prime())
    }

    /// Empirical sample size, `⌈C₁ (k/ε′²) ln(k/ε′)⌉` unless overridden.
    pub fn budget(&self) -> usize {
        self.sample_budget.unwrap_or_else(|| {
            let ep = self.eps_prime();
            let k = self.k as f64;
            ((self.c1 * k / (ep * ep) * (k / ep).ln().max(1.0)).ceil() as usize).max(1)
        })
    }

    /// Draws used by the partitioning step.
    pub fn partition_budget(&self) -> usize {
        crate::partition::partition_sample_size(self.kappa(), self.c0)
    }

    /// Piece-count bound `C₂ · k · log₂²(1/ε)`.
    pub fn piece_bound(&self) -> f64 {
        let l = (1.0 / self.eps).log2().max(1.0);
        self.c2 * self.k as f64 * l * l
    }
}

/// Loop state of the learner: the partition `P_t`, its frozen subset `F_t`
/// (as per-interval flags) and the pass counter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MergeState {
    pub t: usize,
    pub s: usize,
    pub intervals: Vec<Interval>,
    pub frozen: Vec<bool>,
}

impl MergeState {
    /// The state before the first pass: every interval unfrozen.
    pub fn initial(intervals: Vec<Interval>, s: usize) -> Self {
        let frozen = vec![false; intervals.len()];
        Self {
            t: 0,
            s,
            intervals,
            frozen,
        }
    }

    pub fn unfrozen(&self) -> usize {
        self.frozen.iter().filter(|f| !**f).count()
    }

    pub fn frozen_intervals(&self) -> impl Iterator<Item = &Interval> {
        self.intervals
            .iter()
            .zip(&self.frozen)
            .filter_map(|(iv, f)| f.then_some(iv))
    }

    /// Whether the intervals are consecutive and cover `[0, 1)`.
    pub fn is_cover(&self) -> bool {
        self.frozen.len() == self.intervals.len()
            && self.intervals.first().is_some_and(|i| i.lo() == 0.0)
            && self.intervals.last().is_some_and(|i| i.hi() == 1.0)
            && self
                .intervals
                .windows(2)
                .all(|w| w[0].is_followed_by(&w[1]))
    }
}

/// One pass of the merge loop.
///
/// First every unfrozen neighbour pair (judged by the incoming flags) whose
/// merge cost on `empirical` exceeds `threshold` is frozen. Then a single
/// left-to-right scan applies, at position `i`:
///
/// 1. `I_i`, `I_{i+1}` both unfrozen: merge them, move to `i + 2`;
/// 2. `I_i` frozen: keep it, move to `i + 1`;
/// 3. `I_i` unfrozen, `I_{i+1}` frozen: freeze `I_i`, move to `i + 2`;
/// 4. `i` is the last index: freeze `I_i`.
pub fn merge_pass<M: Measure + ?Sized>(
    state: &MergeState,
    empirical: &M,
    threshold: f64,
) -> MergeState {
    let z = state.intervals.len();
    let ivs = &state.intervals;
    let old = &state.frozen;
    let mut frozen = old.clone();
    let masses: Vec<f64> = ivs.iter().map(|iv| empirical.mass_on(iv)).collect();
    for i in 0..z.saturating_sub(1) {
        if !old[i] && !old[i + 1] {
            let a = alpha_from_masses(masses[i], ivs[i].len(), masses[i + 1], ivs[i + 1].len());
            if a > threshold {
                frozen[i] = true;
                frozen[i + 1] = true;
            }
        }
    }

    let mut intervals = Vec::with_capacity(z / 2 + 1);
    let mut flags = Vec::with_capacity(z / 2 + 1);
    let mut i = 0;
    while i < z {
        if i + 1 == z {
            intervals.push(ivs[i]);
            flags.push(true);
            i += 1;
        } else if !frozen[i] && !frozen[i + 1] {
            intervals.push(
                ivs[i]
                    .merge(&ivs[i + 1])
                    .expect("partition intervals are consecutive"),
            );
            flags.push(false);
            i += 2;
        } else if frozen[i] {
            intervals.push(ivs[i]);
            flags.push(true);
            i += 1;
        } else {
            intervals.extend([ivs[i], ivs[i + 1]]);
            flags.extend([true, true]);
            i += 2;
        }
    }
    MergeState {
        t: state.t + 1,
        s: state.s,
        intervals,
        frozen: flags,
    }
}

/// Empirical distribution held as counts over the bins of a fixed partition.
///
/// The learner only ever queries unions of initial intervals, for which this
/// is exactly the empirical distribution. For an interval whose endpoints
/// are not cuts, each point is treated as sitting at its bin's left cut.
#[derive(Debug, Clone, PartialEq)]
pub struct BinnedEmpirical {
    cuts: Vec<f64>,
    prefix: Vec<u64>,
}

impl BinnedEmpirical {
    pub fn new(cuts: Vec<f64>, counts: &[u64]) -> Result<Self> {
        if counts.len() + 1 != cuts.len() {
            return Err(Error::Contract("one count per bin is required".into()));
        }
        let mut prefix = Vec::with_capacity(cuts.len());
        prefix.push(0u64);
        for c in counts {
            prefix.push(prefix.last().unwrap() + c);
        }
        Ok(Self { cuts, prefix })
    }

    /// Number of points.
    pub fn m(&self) -> u64 {
        *self.prefix.last().unwrap()
    }

    fn rank(&self, x: f64) -> usize {
        self.cuts.partition_point(|&c| c < x)
    }

    pub fn count_in(&self, interval: &Interval) -> u64 {
        self.prefix[self.rank(interval.hi())] - self.prefix[self.rank(interval.lo())]
    }
}

impl Measure for BinnedEmpirical {
    fn mass_on(&self, interval: &Interval) -> f64 {
        match self.m() {
            0 => 0.0,
            m => self.count_in(interval) as f64 / m as f64,
        }
    }

    fn total_mass(&self) -> f64 {
        if self.m() == 0 {
            0.0
        } else {
            1.0
        }
    }
}

/// Result of one learner run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LearnOutcome {
    pub hypothesis: PiecewiseDensity,
    /// Points used to build the initial partition.
    pub partition_draws: usize,
    /// Points in the empirical sample.
    pub empirical_draws: usize,
    /// Size of the initial partition.
    pub initial_intervals: usize,
    /// Unfrozen interval counts of `P_0, …, P_s`.
    pub unfrozen: Vec<usize>,
    /// Partition sizes of `P_0, …, P_s`.
    pub sizes: Vec<usize>,
    /// Order statistics that repeated an earlier cut while partitioning.
    pub repeated_cuts: usize,
}

impl LearnOutcome {
    pub fn pieces(&self) -> usize {
        *self.sizes.last().unwrap()
    }
}

/// A learner run with every intermediate state.
#[derive(Debug, Clone, PartialEq)]
pub struct LearnerTrace {
    pub states: Vec<MergeState>,
    pub outcome: LearnOutcome,
}

/// Learns a histogram of a well-behaved target with small `opt_k`.
///
/// Takes exactly two sampling requests from `draws`: the partitioning sample
/// and the empirical sample.
pub fn learn_wb<S: SampleSource + ?Sized>(
    config: &LearnerConfig,
    draws: &mut S,
) -> Result<LearnOutcome> {
    run(config, draws, false).map(|t| t.outcome)
}

/// Same computation as [`learn_wb`], recording `P_0, …, P_s`.
pub fn learner_trace<S: SampleSource + ?Sized>(
    config: &LearnerConfig,
    draws: &mut S,
) -> Result<LearnerTrace> {
    run(config, draws, true)
}

fn run<S: SampleSource + ?Sized>(
    config: &LearnerConfig,
    draws: &mut S,
    record: bool,
) -> Result<LearnerTrace> {
    config.validate()?;
    let part = approx_equal_partition_with(draws, config.kappa(), config.c0)?;
    let m = config.budget();
    let counts = draws.draw_binned(m, part.partition.cuts())?;
    let empirical = BinnedEmpirical::new(part.partition.cuts().to_vec(), &counts)?;
    if empirical.m() == 0 {
        return Err(Error::SampleExhausted {
            requested: m,
            available: 0,
        });
    }

    let s = config.iterations();
    let mut state = MergeState::initial(part.partition.intervals(), s);
    let mut states = Vec::new();
    let mut unfrozen = vec![state.unfrozen()];
    let mut sizes = vec![state.intervals.len()];
    if state.intervals.len() < 2 {
        // nothing to merge; the flattening is the uniform density
        state.s = 0;
    }
    while state.t < state.s {
        let next = merge_pass(&state, &empirical, config.threshold());
        if record {
            states.push(std::mem::replace(&mut state, next));
        } else {
            state = next;
        }
        unfrozen.push(state.unfrozen());
        sizes.push(state.intervals.len());
    }
    let hypothesis = flatten(&empirical, &state.intervals)?;
    if record {
        states.push(state);
    }
    Ok(LearnerTrace {
        states,
        outcome: LearnOutcome {
            hypothesis,
            partition_draws: part.draws,
            empirical_draws: empirical.m() as usize,
            initial_intervals: part.partition.len(),
            unfrozen,
            sizes,
            repeated_cuts: part.repeated_cuts,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::{l1_distance, EmpiricalSample};
    use crate::source::{Binning, CountingSource, TargetSource};

    fn grid(z: usize) -> Vec<Interval> {
        (0..z)
            .map(|i| Interval::new(i as f64 / z as f64, (i + 1) as f64 / z as f64).unwrap())
            .collect()
    }

    #[test]
    fn eps_prime_and_iterations() {
        let c = LearnerConfig::new(1, 0.25).unwrap();
        assert_eq!(c.eps_prime(), 0.125);
        assert_eq!(c.iterations(), 3);
        assert_eq!(c.threshold(), 0.0625);
        assert_eq!(eps_prime(0.5), 0.5);
        assert_eq!(eps_prime(1.28), 1.28);
        assert!(LearnerConfig::new(1, 1.0).is_err());
        assert!(LearnerConfig::new(0, 0.1).is_err());
    }

    #[test]
    fn uniform_empirical_halves() {
        let ivs = grid(5);
        let pts: Vec<f64> = (0..5).map(|i| (i as f64 + 0.5) / 5.0).collect();
        let emp = EmpiricalSample::new(pts).unwrap();
        let next = merge_pass(&MergeState::initial(ivs.clone(), 3), &emp, 0.01);
        assert_eq!(next.intervals.len(), 3);
        assert_eq!(next.frozen, vec![false, false, true]);
        assert_eq!(next.intervals[2], ivs[4]);
    }

    #[test]
    fn all_costly_pairs_freeze_everything() {
        let ivs = grid(4);
        let emp = EmpiricalSample::new(vec![0.1, 0.1, 0.1, 0.6]).unwrap();
        let next = merge_pass(&MergeState::initial(ivs.clone(), 2), &emp, 0.1);
        assert_eq!(next.intervals, ivs);
        assert!(next.frozen.iter().all(|f| *f));
    }

    #[test]
    fn golden_first_pair_frozen() {
        let ivs = grid(4);
        // all mass in I1, so only alpha(I1, I2) is positive
        let emp = EmpiricalSample::new(vec![0.1; 4]).unwrap();
        let next = merge_pass(&MergeState::initial(ivs.clone(), 2), &emp, 0.5);
        assert_eq!(
            next.intervals,
            vec![ivs[0], ivs[1], Interval::new(0.5, 1.0).unwrap()]
        );
        assert_eq!(next.frozen, vec![true, true, false]);
    }

    #[test]
    fn case_three_freezes_left_neighbour() {
        let ivs = grid(3);
        let state = MergeState {
            t: 0,
            s: 2,
            intervals: ivs.clone(),
            frozen: vec![false, true, false],
        };
        let emp = EmpiricalSample::new(vec![0.5]).unwrap();
        let next = merge_pass(&state, &emp, 10.0);
        assert_eq!(next.intervals, ivs);
        assert_eq!(next.frozen, vec![true, true, true]);
    }

    #[test]
    fn binned_matches_raw_empirical() {
        let cuts = vec![0.0, 0.2, 0.5, 1.0];
        let b = BinnedEmpirical::new(cuts, &[1, 2, 1]).unwrap();
        let e = EmpiricalSample::new(vec![0.1, 0.3, 0.4, 0.9]).unwrap();
        for (lo, hi) in [(0.0, 0.5), (0.2, 1.0), (0.5, 1.0), (0.0, 1.0)] {
            let iv = Interval::new(lo, hi).unwrap();
            assert_eq!(b.mass_on(&iv), e.mass_on(&iv));
        }
    }

    #[test]
    fn learns_uniform_with_two_phases() {
        let cfg = LearnerConfig::new(1, 0.1).unwrap();
        let mut src = CountingSource::new(
            TargetSource::new(PiecewiseDensity::uniform(), 17).with_binning(Binning::Multinomial),
        );
        let ledger = src.ledger();
        let trace = learner_trace(&cfg, &mut src).unwrap();
        assert_eq!(trace.states.len(), cfg.iterations() + 1);
        assert_eq!(ledger.phases(), vec![cfg.partition_budget(), cfg.budget()]);
        let h = &trace.outcome.hypothesis;
        assert!(l1_distance(h, &PiecewiseDensity::uniform()) <= 0.3);
        assert!((h.total_mass() - 1.0).abs() < 1e-9);
    }
}
