//! The hard ensemble `D_t` over `[2N]` and distinguishing experiments.
//!
//! An instance picks `S1 ⊂ [N]` and `S2 ⊂ [N+1..2N]` of size `tN` uniformly
//! at random and puts weight
//!
//! * `1/(4N)` on `S1` and `(2−t)/(4N(1−t))` on `[N] \ S1`,
//! * `3/(4N)` on `S2` and `(2−3t)/(4N(1−t))` on `[N+1..2N] \ S2`.
//!
//! Every instance is exactly `t`-far from uniform in L1, yet with `o(√N)`
//! draws it looks uniform, because no draw repeats. A learner that always
//! gets within factor less than 2 of `opt_2` would tell the two apart, so no
//! such learner exists at that sample size. The lab checks the identities
//! exactly and runs the distinguishing experiment with pluggable rules.

use num_rational::Ratio;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::density::{discretize_weights, midpoint_range, DiscreteDistribution, Interval, Measure};
use crate::error::{check_open_unit, check_positive_count, Error, Result};
use crate::seed::stream_rng;
use crate::selection::{agnostic_learn, AgnosticConfig};
use crate::source::{SampleSource, Target, TargetSource};

/// The four weights `(S1, [N]∖S1, S2, [N+1..2N]∖S2)` in exact arithmetic.
pub fn exact_weights(n: usize, tn: usize) -> [Ratio<i128>; 4] {
    let (n, tn) = (n as i128, tn as i128);
    [
        Ratio::new(1, 4 * n),
        Ratio::new(2 * n - tn, 4 * n * (n - tn)),
        Ratio::new(3, 4 * n),
        Ratio::new(2 * n - 3 * tn, 4 * n * (n - tn)),
    ]
}

/// Resolves `t` to the integer `tN`, requiring `0 < t < 1/2`.
pub fn resolve_tn(n: usize, t: f64) -> Result<usize> {
    check_positive_count("N", n)?;
    let scaled = t * n as f64;
    let tn = scaled.round();
    if !(t > 0.0 && t < 0.5)
        || (scaled - tn).abs() > 1e-9 * n as f64
        || tn < 1.0
        || 2.0 * tn >= n as f64
    {
        return Err(Error::InvalidParameter {
            name: "t",
            value: t,
            expected: "0 < t < 1/2 with t·N a positive integer",
        });
    }
    Ok(tn as usize)
}

/// One draw `p_{S1,S2,t}` from the ensemble, embedded on `[0, 1)` at cell
/// midpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct HardInstance {
    n: usize,
    tn: usize,
    // permutations of 0..N whose first tN entries are S1 (resp. S2 - N)
    first: Vec<u32>,
    second: Vec<u32>,
    s1_sorted: Vec<u32>,
    s2_sorted: Vec<u32>,
    weights: [f64; 4],
    class_mass: [f64; 4],
}

fn partial_shuffle<R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> Vec<u32> {
    let mut perm: Vec<u32> = (0..n as u32).collect();
    for i in 0..k {
        let j = rng.random_range(i..n);
        perm.swap(i, j);
    }
    perm
}

impl HardInstance {
    /// Draws `S1`, `S2` uniformly among `tN`-subsets.
    pub fn sample<R: Rng + ?Sized>(n: usize, t: f64, rng: &mut R) -> Result<Self> {
        let tn = resolve_tn(n, t)?;
        if n > u32::MAX as usize {
            return Err(Error::DomainTooLarge {
                size: n,
                cap: u32::MAX as usize,
            });
        }
        let first = partial_shuffle(n, tn, rng);
        let second = partial_shuffle(n, tn, rng);
        Ok(Self::build(n, tn, first, second))
    }

    /// An instance with given sets; `s1` indexes `0..N`, `s2` indexes
    /// `N..2N`, both zero-based.
    pub fn with_sets(n: usize, s1: &[u32], s2: &[u32]) -> Result<Self> {
        let tn = s1.len();
        resolve_tn(n, tn as f64 / n as f64)?;
        let arrange = |set: &[u32], offset: u32| -> Result<Vec<u32>> {
            let mut member = vec![false; n];
            for &i in set {
                let j = i
                    .checked_sub(offset)
                    .filter(|&j| (j as usize) < n)
                    .ok_or_else(|| Error::Contract(format!("index {i} is outside its half")))?
                    as usize;
                if std::mem::replace(&mut member[j], true) {
                    return Err(Error::Contract(format!("index {i} repeated")));
                }
            }
            let mut perm: Vec<u32> = set.iter().map(|i| i - offset).collect();
            perm.extend((0..n as u32).filter(|&j| !member[j as usize]));
            Ok(perm)
        };
        if s2.len() != tn {
            return Err(Error::Contract("S1 and S2 must have equal size".into()));
        }
        Ok(Self::build(n, tn, arrange(s1, 0)?, arrange(s2, n as u32)?))
    }

    fn build(n: usize, tn: usize, first: Vec<u32>, second: Vec<u32>) -> Self {
        let exact = exact_weights(n, tn);
        let weights = exact.map(|r| *r.numer() as f64 / *r.denom() as f64);
        let sizes = [tn, n - tn, tn, n - tn];
        let class_mass = [0, 1, 2, 3].map(|c| {
            let r = exact[c] * Ratio::from_integer(sizes[c] as i128);
            *r.numer() as f64 / *r.denom() as f64
        });
        let mut s1_sorted = first[..tn].to_vec();
        s1_sorted.sort_unstable();
        let mut s2_sorted = second[..tn].to_vec();
        s2_sorted.sort_unstable();
        Self {
            n,
            tn,
            first,
            second,
            s1_sorted,
            s2_sorted,
            weights,
            class_mass,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn tn(&self) -> usize {
        self.tn
    }

    pub fn t(&self) -> f64 {
        self.tn as f64 / self.n as f64
    }

    /// Zero-based members of `S1`, sorted.
    pub fn s1(&self) -> Vec<usize> {
        self.s1_sorted.iter().map(|&i| i as usize).collect()
    }

    /// Zero-based members of `S2` (in `N..2N`), sorted.
    pub fn s2(&self) -> Vec<usize> {
        self.s2_sorted
            .iter()
            .map(|&i| self.n + i as usize)
            .collect()
    }

    /// Weight of zero-based element `i` of `[2N]`.
    pub fn weight(&self, i: usize) -> f64 {
        if i < self.n {
            let hit = self.s1_sorted.binary_search(&(i as u32)).is_ok();
            self.weights[if hit { 0 } else { 1 }]
        } else {
            let hit = self.s2_sorted.binary_search(&((i - self.n) as u32)).is_ok();
            self.weights[if hit { 2 } else { 3 }]
        }
    }

    pub fn to_discrete(&self) -> Result<DiscreteDistribution> {
        DiscreteDistribution::new((0..2 * self.n).map(|i| self.weight(i)).collect())
    }

    /// The 2-flat distribution with level `(2−t)/(4N(1−t))` on the first
    /// half and `(2−3t)/(4N(1−t))` on the second.
    pub fn witness(&self) -> Result<DiscreteDistribution> {
        let mut w = vec![self.weights[1]; self.n];
        w.extend(std::iter::repeat_n(self.weights[3], self.n));
        DiscreteDistribution::new(w)
    }

    /// `Σ p_i²`, which fixes the expected number of collisions.
    pub fn collision_probability(&self) -> f64 {
        ensemble_collision_probability(self.n, self.tn)
    }

    /// One zero-based element of `[2N]`.
    pub fn sample_index<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let mut u = rng.random::<f64>();
        let mut class = 3;
        for c in 0..3 {
            if u < self.class_mass[c] {
                class = c;
                break;
            }
            u -= self.class_mass[c];
        }
        let (tn, n) = (self.tn, self.n);
        match class {
            0 => self.first[rng.random_range(0..tn)] as usize,
            1 => self.first[tn + rng.random_range(0..n - tn)] as usize,
            2 => n + self.second[rng.random_range(0..tn)] as usize,
            _ => n + self.second[tn + rng.random_range(0..n - tn)] as usize,
        }
    }

    fn count_sorted(set: &[u32], lo: usize, hi: usize) -> usize {
        set.partition_point(|&x| (x as usize) < hi) - set.partition_point(|&x| (x as usize) < lo)
    }

    /// Mass of zero-based elements `a..b`.
    pub fn range_mass(&self, a: usize, b: usize) -> f64 {
        let n = self.n;
        let mut total = 0.0;
        let (a1, b1) = (a.min(n), b.min(n));
        if b1 > a1 {
            let hits = Self::count_sorted(&self.s1_sorted, a1, b1) as f64;
            total += hits * self.weights[0] + ((b1 - a1) as f64 - hits) * self.weights[1];
        }
        let (a2, b2) = (a.max(n) - n, b.max(n) - n);
        if b2 > a2 {
            let hits = Self::count_sorted(&self.s2_sorted, a2, b2) as f64;
            total += hits * self.weights[2] + ((b2 - a2) as f64 - hits) * self.weights[3];
        }
        total
    }
}

impl Measure for HardInstance {
    fn mass_on(&self, interval: &Interval) -> f64 {
        let (a, b) = midpoint_range(2 * self.n, interval);
        self.range_mass(a, b)
    }

    fn total_mass(&self) -> f64 {
        self.class_mass.iter().sum()
    }
}

impl Target for HardInstance {
    fn sample_point<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        (self.sample_index(rng) as f64 + 0.5) / (2 * self.n) as f64
    }
}

/// The uniform distribution on `[M]`, midpoint-embedded, without storing
/// weights.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformGrid {
    pub size: usize,
}

impl Measure for UniformGrid {
    fn mass_on(&self, interval: &Interval) -> f64 {
        let (a, b) = midpoint_range(self.size, interval);
        b.saturating_sub(a) as f64 / self.size as f64
    }

    fn total_mass(&self) -> f64 {
        1.0
    }
}

impl Target for UniformGrid {
    fn sample_point<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        (rng.random_range(0..self.size) as f64 + 0.5) / self.size as f64
    }
}

/// `(t/2)(1 + t/(1−t))`, the distance of the witness from an instance.
pub fn witness_distance(t: f64) -> f64 {
    t / 2.0 * (1.0 + t / (1.0 - t))
}

/// Accuracy used by the learner-based rule: `ε = δ³/(12(2+δ))`.
pub fn demo_eps(delta: f64) -> f64 {
    delta.powi(3) / (12.0 * (2.0 + delta))
}

/// Distance `t = δ/(2+δ)` of the instances used with accuracy `δ`.
pub fn demo_t(delta: f64) -> f64 {
    delta / (2.0 + delta)
}

/// A rule that looks at draws and says "uniform" or "non-uniform".
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "rule")]
pub enum Distinguisher {
    /// Counts colliding pairs and thresholds midway between the expected
    /// counts under the two regimes.
    Collision,
    /// Runs the agnostic learner with `k = 2` and says "uniform" when the
    /// hypothesis is within `3ε/2` of uniform, `ε = δ³/(12(2+δ))`. Every
    /// sampling request of the learner is truncated to `m` draws.
    Learner { delta: f64 },
}

/// Setup of a distinguishing experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LabConfig {
    pub n: usize,
    pub t: f64,
    pub m: usize,
    pub trials: usize,
    pub distinguisher: Distinguisher,
    pub seed: u64,
}

/// One trial of one regime.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrialRecord {
    /// `"uniform"` or `"hard"`.
    pub regime: &'static str,
    pub trial: usize,
    /// Collision count, or the learner's distance from uniform.
    pub statistic: f64,
    pub says_nonuniform: bool,
    /// Whether any sample value repeated.
    pub repeated: bool,
    pub draws: usize,
}

/// Outcome of [`distinguishing_experiment`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LabReport {
    pub config: LabConfig,
    /// Fraction of uniform trials called non-uniform.
    pub uniform_rate: f64,
    /// Fraction of hard-instance trials called non-uniform.
    pub hard_rate: f64,
    /// `hard_rate − uniform_rate`.
    pub advantage: f64,
    pub threshold: f64,
    pub records: Vec<TrialRecord>,
}

impl LabReport {
    pub fn records_of<'a>(&'a self, regime: &'a str) -> impl Iterator<Item = &'a TrialRecord> + 'a {
        self.records.iter().filter(move |r| r.regime == regime)
    }

    /// Fraction of trials of `regime` with a repeated value.
    pub fn repeat_rate(&self, regime: &str) -> f64 {
        let (hits, total) = self
            .records_of(regime)
            .fold((0, 0), |(h, n), r| (h + r.repeated as usize, n + 1));
        hits as f64 / total.max(1) as f64
    }
}

const UNIFORM_STREAM: u64 = 0;
const HARD_STREAM: u64 = 1;

fn collisions(mut idx: Vec<usize>) -> (f64, bool) {
    idx.sort_unstable();
    let mut pairs = 0u64;
    let mut repeated = false;
    for run in idx.chunk_by(|a, b| a == b) {
        let c = run.len() as u64;
        pairs += c * (c - 1) / 2;
        repeated |= c > 1;
    }
    (pairs as f64, repeated)
}

/// Truncates every sampling request to at most `cap` draws.
struct CappedSource<S> {
    inner: S,
    cap: usize,
    used: usize,
}

impl<S: SampleSource> SampleSource for CappedSource<S> {
    fn next_sample(&mut self) -> Result<f64> {
        self.used += 1;
        self.inner.next_sample()
    }

    fn draw(&mut self, n: usize) -> Result<Vec<f64>> {
        let n = n.min(self.cap);
        self.used += n;
        self.inner.draw(n)
    }

    fn draw_binned(&mut self, n: usize, cuts: &[f64]) -> Result<Vec<u64>> {
        let n = n.min(self.cap);
        self.used += n;
        self.inner.draw_binned(n, cuts)
    }
}

/// Distance from `[2N]`-uniform of the learner's hypothesis on `draws`.
fn learner_statistic<T: Target + Clone + Send>(
    target: T,
    n: usize,
    m: usize,
    delta: f64,
    seed: u64,
) -> Result<(f64, bool, usize)> {
    let eps = demo_eps(delta);
    let config = AgnosticConfig::new(2, eps)?;
    let mut src = CappedSource {
        inner: TargetSource::new(target, seed),
        cap: m,
        used: 0,
    };
    let out = agnostic_learn(&config, &mut src)?;
    let w = discretize_weights(&out.hypothesis, 2 * n);
    let u = 1.0 / (2 * n) as f64;
    let dist: f64 = w.iter().map(|x| (x - u).abs()).sum();
    Ok((dist, dist >= 1.5 * eps, src.used))
}

/// Runs `trials` uniform and `trials` hard-instance trials through a rule.
///
/// `Σ p_i²`, the same for every instance with these sizes.
fn ensemble_collision_probability(n: usize, tn: usize) -> f64 {
    let w = exact_weights(n, tn).map(|r| *r.numer() as f64 / *r.denom() as f64);
    let (tn, rest) = (tn as f64, (n - tn) as f64);
    tn * w[0] * w[0] + rest * w[1] * w[1] + tn * w[2] * w[2] + rest * w[3] * w[3]
}

/// Trial `i` of the uniform regime uses stream `[0, i]` below the seed, of
/// the hard regime `[1, i]`; each hard trial draws a fresh instance.
pub fn distinguishing_experiment(config: &LabConfig) -> Result<LabReport> {
    let LabConfig {
        n, t, m, trials, ..
    } = *config;
    check_positive_count("m", m)?;
    check_positive_count("trials", trials)?;
    let tn = resolve_tn(n, t)?;
    let size = 2 * n;
    let grid = UniformGrid { size };
    let pairs = (m as f64) * (m as f64 - 1.0) / 2.0;
    let sum_sq = ensemble_collision_probability(n, tn);
    let threshold = match config.distinguisher {
        Distinguisher::Collision => (pairs / size as f64 + pairs * sum_sq) / 2.0,
        Distinguisher::Learner { delta } => {
            check_open_unit("delta", delta)?;
            1.5 * demo_eps(delta)
        }
    };

    let run = |regime: u64, trial: usize| -> Result<TrialRecord> {
        let mut rng = stream_rng(config.seed, &[regime, trial as u64]);
        let instance = if regime == HARD_STREAM {
            Some(HardInstance::sample(n, t, &mut rng)?)
        } else {
            None
        };
        let (statistic, says, repeated, draws) = match config.distinguisher {
            Distinguisher::Collision => {
                let idx: Vec<usize> = match &instance {
                    Some(h) => (0..m).map(|_| h.sample_index(&mut rng)).collect(),
                    None => (0..m).map(|_| rng.random_range(0..size)).collect(),
                };
                let (c, rep) = collisions(idx);
                (c, c > threshold, rep, m)
            }
            Distinguisher::Learner { delta } => {
                let seed = rng.random::<u64>();
                let (d, says, used) = match &instance {
                    Some(h) => learner_statistic(h, n, m, delta, seed)?,
                    None => learner_statistic(grid, n, m, delta, seed)?,
                };
                (d, says, false, used)
            }
        };
        Ok(TrialRecord {
            regime: if regime == HARD_STREAM {
                "hard"
            } else {
                "uniform"
            },
            trial,
            statistic,
            says_nonuniform: says,
            repeated,
            draws,
        })
    };
    let records = crate::par::try_map_indexed(2 * trials, |i| {
        if i < trials {
            run(UNIFORM_STREAM, i)
        } else {
            run(HARD_STREAM, i - trials)
        }
    })?;
    let rate = |regime: &str| {
        records
            .iter()
            .filter(|r| r.regime == regime && r.says_nonuniform)
            .count() as f64
            / trials as f64
    };
    let (uniform_rate, hard_rate) = (rate("uniform"), rate("hard"));
    Ok(LabReport {
        config: *config,
        uniform_rate,
        hard_rate,
        advantage: hard_rate - uniform_rate,
        threshold,
        records,
    })
}

/// Summary of [`agnostic_floor_demo`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FloorReport {
    pub n: usize,
    pub delta: f64,
    pub t: f64,
    pub eps: f64,
    /// `t − (2−δ)(t/2)(1 + t/(1−t)) − ε`, which equals `2ε`: the margin by
    /// which a `(2−δ)`-agnostic learner's output would separate the regimes.
    pub analytic_gap: f64,
    pub uniform_errors: Vec<f64>,
    pub hard_errors: Vec<f64>,
    pub advantage: f64,
    pub lab: LabReport,
}

/// Runs the learner-based rule with `m` draws per request and reports the
/// distribution of `‖h − U_{2N}‖₁` in both regimes.
pub fn agnostic_floor_demo(
    n: usize,
    delta: f64,
    m: usize,
    trials: usize,
    seed: u64,
) -> Result<FloorReport> {
    check_open_unit("delta", delta)?;
    let t = demo_t(delta);
    let eps = demo_eps(delta);
    let lab = distinguishing_experiment(&LabConfig {
        n,
        t,
        m,
        trials,
        distinguisher: Distinguisher::Learner { delta },
        seed,
    })?;
    let errors = |regime: &str| {
        lab.records_of(regime)
            .map(|r| r.statistic)
            .collect::<Vec<_>>()
    };
    Ok(FloorReport {
        n,
        delta,
        t,
        eps,
        analytic_gap: t - (2.0 - delta) * witness_distance(t) - eps,
        uniform_errors: errors("uniform"),
        hard_errors: errors("hard"),
        advantage: lab.advantage,
        lab,
    })
}
