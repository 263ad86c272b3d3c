//! Sample access to a target distribution.
//!
//! Learners never see the target itself, only a [`SampleSource`]. A source
//! hands out i.i.d. points one at a time, in batches, or pre-binned against a
//! set of cuts. Binned draws are what the learner needs for its empirical
//! distribution; sources backed by a known target may answer them by exact
//! multinomial sampling instead of drawing every point, which yields counts
//! with the same joint law at a cost independent of the batch size.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use rand::{Rng, SeedableRng};
use rand_distr::{Binomial, Distribution};

use crate::density::{
    DiscreteDistribution, EmpiricalSample, Interval, Measure, MixedDistribution, PiecewiseDensity,
};
use crate::error::{check_positive_count, Error, Result};
use crate::seed::{split_seed, StreamRng};

/// A distribution on `[0, 1)` that can be sampled and measured exactly.
pub trait Target: Measure + Sync {
    /// One draw from the target.
    fn sample_point<R: Rng + ?Sized>(&self, rng: &mut R) -> f64;
}

impl Target for PiecewiseDensity {
    fn sample_point<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.quantile_normalized(rng.random::<f64>())
    }
}

impl Target for DiscreteDistribution {
    fn sample_point<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.midpoint(self.index_for(rng.random::<f64>()))
    }
}

impl Target for MixedDistribution {
    fn sample_point<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let mut u = rng.random::<f64>() * self.total_mass();
        for a in self.atoms() {
            if u < a.mass {
                return a.x;
            }
            u -= a.mass;
        }
        if self.histogram().total_mass() > 0.0 {
            self.histogram().quantile_normalized(rng.random::<f64>())
        } else {
            self.atoms().last().map(|a| a.x).unwrap_or(0.0)
        }
    }
}

impl<T: Target + ?Sized> Target for &T {
    fn sample_point<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        (**self).sample_point(rng)
    }
}

impl<T: Measure + ?Sized> Measure for &T {
    fn mass_on(&self, interval: &Interval) -> f64 {
        (**self).mass_on(interval)
    }

    fn total_mass(&self) -> f64 {
        (**self).total_mass()
    }
}

/// Draws `m` i.i.d. points from a full distribution.
pub fn sample<T: Target + ?Sized, R: Rng + ?Sized>(
    target: &T,
    m: usize,
    rng: &mut R,
) -> Result<EmpiricalSample> {
    check_positive_count("m", m)?;
    let mass = target.total_mass();
    if (mass - 1.0).abs() > crate::density::FULL_MASS_TOLERANCE {
        return Err(Error::NotADistribution { mass });
    }
    EmpiricalSample::new((0..m).map(|_| target.sample_point(rng)).collect())
}

/// Draws `m` atom indices from a discrete distribution.
pub fn sample_indices<R: Rng + ?Sized>(
    dist: &DiscreteDistribution,
    m: usize,
    rng: &mut R,
) -> Vec<usize> {
    (0..m)
        .map(|_| dist.index_for(rng.random::<f64>()))
        .collect()
}

/// Index of the bin `[cuts[i], cuts[i + 1])` holding `x`.
#[inline]
pub(crate) fn bin_of(cuts: &[f64], x: f64) -> usize {
    cuts.partition_point(|&c| c <= x)
        .saturating_sub(1)
        .min(cuts.len() - 2)
}

fn check_cuts(cuts: &[f64]) -> Result<()> {
    if cuts.len() < 2 || cuts[0] != 0.0 || *cuts.last().unwrap() != 1.0 {
        return Err(Error::Contract("bin cuts must run from 0 to 1".into()));
    }
    if cuts.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Contract(
            "bin cuts must be strictly increasing".into(),
        ));
    }
    Ok(())
}

/// Sequential access to i.i.d. draws from an unknown distribution.
pub trait SampleSource {
    /// One fresh draw.
    fn next_sample(&mut self) -> Result<f64>;

    /// `n` fresh draws, in draw order.
    fn draw(&mut self, n: usize) -> Result<Vec<f64>> {
        (0..n).map(|_| self.next_sample()).collect()
    }

    /// Counts of `n` fresh draws in the bins `[cuts[i], cuts[i + 1])`.
    fn draw_binned(&mut self, n: usize, cuts: &[f64]) -> Result<Vec<u64>> {
        check_cuts(cuts)?;
        let mut counts = vec![0u64; cuts.len() - 1];
        for _ in 0..n {
            counts[bin_of(cuts, self.next_sample()?)] += 1;
        }
        Ok(counts)
    }

    /// An independent source on child stream `stream`, when the source can
    /// produce one. Finite sources cannot.
    fn fork(&self, _stream: u64) -> Option<Self>
    where
        Self: Sized,
    {
        None
    }
}

impl<S: SampleSource + ?Sized> SampleSource for &mut S {
    fn next_sample(&mut self) -> Result<f64> {
        (**self).next_sample()
    }

    fn draw(&mut self, n: usize) -> Result<Vec<f64>> {
        (**self).draw(n)
    }

    fn draw_binned(&mut self, n: usize, cuts: &[f64]) -> Result<Vec<u64>> {
        (**self).draw_binned(n, cuts)
    }
}

/// How a [`TargetSource`] answers binned requests.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Binning {
    /// Draw every point and bin it.
    Pointwise,
    /// Sample the bin counts directly from their multinomial law.
    Multinomial,
}

/// Seeded i.i.d. draws from a known target.
#[derive(Debug, Clone)]
pub struct TargetSource<T> {
    target: T,
    seed: u64,
    rng: StreamRng,
    binning: Binning,
}

impl<T: Target> TargetSource<T> {
    pub fn new(target: T, seed: u64) -> Self {
        Self {
            target,
            seed,
            rng: StreamRng::seed_from_u64(seed),
            binning: Binning::Pointwise,
        }
    }

    pub fn with_binning(mut self, binning: Binning) -> Self {
        self.binning = binning;
        self
    }

    pub fn target(&self) -> &T {
        &self.target
    }
}

/// Multinomial counts by sequential conditional binomials.
pub(crate) fn multinomial<R: Rng + ?Sized>(n: u64, probs: &[f64], rng: &mut R) -> Vec<u64> {
    let mut counts = vec![0u64; probs.len()];
    let mut remaining_n = n;
    let mut remaining_p: f64 = probs.iter().sum();
    for (i, &p) in probs.iter().enumerate() {
        if remaining_n == 0 {
            break;
        }
        if i + 1 == probs.len() {
            counts[i] = remaining_n;
            break;
        }
        let q = if remaining_p > 0.0 {
            (p / remaining_p).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let c = if q >= 1.0 {
            remaining_n
        } else if q <= 0.0 {
            0
        } else {
            Binomial::new(remaining_n, q)
                .expect("valid binomial parameters")
                .sample(rng)
        };
        counts[i] = c;
        remaining_n -= c;
        remaining_p -= p;
    }
    counts
}

impl<T: Target + Clone> SampleSource for TargetSource<T> {
    fn next_sample(&mut self) -> Result<f64> {
        Ok(self.target.sample_point(&mut self.rng))
    }

    fn draw_binned(&mut self, n: usize, cuts: &[f64]) -> Result<Vec<u64>> {
        check_cuts(cuts)?;
        match self.binning {
            Binning::Pointwise => {
                let mut counts = vec![0u64; cuts.len() - 1];
                for _ in 0..n {
                    let x = self.target.sample_point(&mut self.rng);
                    counts[bin_of(cuts, x)] += 1;
                }
                Ok(counts)
            }
            Binning::Multinomial => {
                let probs: Vec<f64> = cuts
                    .windows(2)
                    .map(|w| self.target.mass_on(&Interval::new(w[0], w[1]).unwrap()))
                    .collect();
                Ok(multinomial(n as u64, &probs, &mut self.rng))
            }
        }
    }

    fn fork(&self, stream: u64) -> Option<Self> {
        let seed = split_seed(self.seed, &[stream]);
        Some(Self {
            target: self.target.clone(),
            seed,
            rng: StreamRng::seed_from_u64(seed),
            binning: self.binning,
        })
    }
}

/// Replays a finite list of draws, typically read from a file.
#[derive(Debug, Clone)]
pub struct VecSource {
    points: Vec<f64>,
    cursor: usize,
}

impl VecSource {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if let Some(x) = points
            .iter()
            .find(|x| !(x.is_finite() && (0.0..1.0).contains(*x)))
        {
            return Err(Error::Contract(format!(
                "sample point {x} lies outside [0, 1)"
            )));
        }
        Ok(Self { points, cursor: 0 })
    }

    pub fn remaining(&self) -> usize {
        self.points.len() - self.cursor
    }

    pub fn consumed(&self) -> usize {
        self.cursor
    }
}

impl SampleSource for VecSource {
    fn next_sample(&mut self) -> Result<f64> {
        let x = *self.points.get(self.cursor).ok_or(Error::SampleExhausted {
            requested: 1,
            available: 0,
        })?;
        self.cursor += 1;
        Ok(x)
    }

    fn draw(&mut self, n: usize) -> Result<Vec<f64>> {
        if n > self.remaining() {
            return Err(Error::SampleExhausted {
                requested: n,
                available: self.remaining(),
            });
        }
        let out = self.points[self.cursor..self.cursor + n].to_vec();
        self.cursor += n;
        Ok(out)
    }

    fn draw_binned(&mut self, n: usize, cuts: &[f64]) -> Result<Vec<u64>> {
        check_cuts(cuts)?;
        let batch = self.draw(n)?;
        let mut counts = vec![0u64; cuts.len() - 1];
        for x in batch {
            counts[bin_of(cuts, x)] += 1;
        }
        Ok(counts)
    }
}

/// Draw accounting shared between a [`CountingSource`] and its forks.
#[derive(Debug, Default)]
pub struct DrawLedger {
    draws: AtomicU64,
    phases: Mutex<Vec<usize>>,
}

impl DrawLedger {
    pub fn total_draws(&self) -> u64 {
        self.draws.load(Ordering::Relaxed)
    }

    /// Sizes of the sampling requests in arrival order; a single-point
    /// request counts as its own phase.
    pub fn phases(&self) -> Vec<usize> {
        self.phases.lock().unwrap().clone()
    }

    fn record(&self, n: usize) {
        self.draws.fetch_add(n as u64, Ordering::Relaxed);
        self.phases.lock().unwrap().push(n);
    }
}

/// Wraps a source and records every sampling request.
#[derive(Debug)]
pub struct CountingSource<S> {
    inner: S,
    ledger: Arc<DrawLedger>,
}

impl<S> CountingSource<S> {
    pub fn new(inner: S) -> Self {
        Self {
            inner,
            ledger: Arc::new(DrawLedger::default()),
        }
    }

    pub fn ledger(&self) -> Arc<DrawLedger> {
        Arc::clone(&self.ledger)
    }

    pub fn into_inner(self) -> S {
        self.inner
    }
}

impl<S: SampleSource> SampleSource for CountingSource<S> {
    fn next_sample(&mut self) -> Result<f64> {
        let x = self.inner.next_sample()?;
        self.ledger.record(1);
        Ok(x)
    }

    fn draw(&mut self, n: usize) -> Result<Vec<f64>> {
        let out = self.inner.draw(n)?;
        self.ledger.record(n);
        Ok(out)
    }

    fn draw_binned(&mut self, n: usize, cuts: &[f64]) -> Result<Vec<u64>> {
        let out = self.inner.draw_binned(n, cuts)?;
        self.ledger.record(n);
        Ok(out)
    }

    fn fork(&self, stream: u64) -> Option<Self> {
        Some(Self {
            inner: self.inner.fork(stream)?,
            ledger: Arc::clone(&self.ledger),
        })
    }
}

/// Minimum acceptance rate of a [`FilteredSource`].
pub const MIN_ACCEPTANCE_RATE: f64 = 1e-3;
const ACCEPTANCE_WARMUP: u64 = 10_000;

#[derive(Debug, Default)]
struct AcceptanceCounters {
    raw: AtomicU64,
    accepted: AtomicU64,
}

/// Rejection sampler for the conditional distribution on `[0, 1) \ S`, where
/// `S` is a finite set of excluded points compared bit-exactly.
#[derive(Debug)]
pub struct FilteredSource<S> {
    inner: S,
    excluded: Arc<Vec<u64>>,
    counters: Arc<AcceptanceCounters>,
}

impl<S: SampleSource> FilteredSource<S> {
    pub fn new(inner: S, excluded: &[f64]) -> Self {
        let mut bits: Vec<u64> = excluded.iter().map(|x| (x + 0.0).to_bits()).collect();
        bits.sort_unstable();
        bits.dedup();
        Self {
            inner,
            excluded: Arc::new(bits),
            counters: Arc::new(AcceptanceCounters::default()),
        }
    }

    fn is_excluded(&self, x: f64) -> bool {
        self.excluded.binary_search(&(x + 0.0).to_bits()).is_ok()
    }

    /// Raw draws taken from the wrapped source so far, across forks.
    pub fn raw_draws(&self) -> u64 {
        self.counters.raw.load(Ordering::Relaxed)
    }

    /// Fraction of raw draws that were accepted so far.
    pub fn acceptance_rate(&self) -> f64 {
        let raw = self.raw_draws();
        if raw == 0 {
            1.0
        } else {
            self.counters.accepted.load(Ordering::Relaxed) as f64 / raw as f64
        }
    }

    fn account(&self, raw: u64, accepted: u64) -> Result<()> {
        self.counters.raw.fetch_add(raw, Ordering::Relaxed);
        self.counters
            .accepted
            .fetch_add(accepted, Ordering::Relaxed);
        let rate = self.acceptance_rate();
        if self.raw_draws() >= ACCEPTANCE_WARMUP && rate < MIN_ACCEPTANCE_RATE {
            return Err(Error::LowAcceptance {
                rate,
                floor: MIN_ACCEPTANCE_RATE,
            });
        }
        Ok(())
    }
}

impl<S: SampleSource> SampleSource for FilteredSource<S> {
    fn next_sample(&mut self) -> Result<f64> {
        loop {
            let x = self.inner.next_sample()?;
            let keep = !self.is_excluded(x);
            self.account(1, keep as u64)?;
            if keep {
                return Ok(x);
            }
        }
    }

    /// Each round requests exactly the number of points still missing, so the
    /// accepted points are the first `n` acceptances of an i.i.d. stream.
    /// Excluded points are isolated by one-ulp bins `[x, next_up(x))`, which
    /// contain no other float.
    fn draw_binned(&mut self, n: usize, cuts: &[f64]) -> Result<Vec<u64>> {
        check_cuts(cuts)?;
        let mut refined: Vec<f64> = cuts.to_vec();
        for &b in self.excluded.iter() {
            let x = f64::from_bits(b);
            refined.push(x);
            refined.push(x.next_up());
        }
        refined.sort_by(f64::total_cmp);
        refined.dedup();
        refined.retain(|&c| c <= 1.0);
        // map each refined bin to a coarse bin, or None for an excluded point
        let targets: Vec<Option<usize>> = refined
            .windows(2)
            .map(|w| {
                if self.is_excluded(w[0]) && w[1] == w[0].next_up() {
                    None
                } else {
                    Some(bin_of(cuts, w[0]))
                }
            })
            .collect();
        let mut counts = vec![0u64; cuts.len() - 1];
        let mut accepted = 0usize;
        while accepted < n {
            let need = n - accepted;
            let raw = self.inner.draw_binned(need, &refined)?;
            let mut got = 0u64;
            for (c, t) in raw.iter().zip(&targets) {
                if let Some(bin) = t {
                    counts[*bin] += c;
                    got += c;
                }
            }
            self.account(need as u64, got)?;
            accepted += got as usize;
        }
        Ok(counts)
    }

    fn fork(&self, stream: u64) -> Option<Self> {
        Some(Self {
            inner: self.inner.fork(stream)?,
            excluded: Arc::clone(&self.excluded),
            counters: Arc::clone(&self.counters),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::Atom;

    #[test]
    fn point_mass_sampling() {
        let d = DiscreteDistribution::new(vec![0.0, 1.0, 0.0]).unwrap();
        let mut rng = StreamRng::seed_from_u64(1);
        let s = sample(&d, 5, &mut rng).unwrap();
        assert_eq!(s.points(), &[0.5; 5]);
    }

    #[test]
    fn uniform_half_mass() {
        let mut rng = StreamRng::seed_from_u64(11);
        let s = sample(&PiecewiseDensity::uniform(), 100_000, &mut rng).unwrap();
        let half = s.mass_on(&Interval::new(0.0, 0.5).unwrap());
        assert!((half - 0.5).abs() <= 0.01, "{half}");
    }

    #[test]
    fn sampling_is_deterministic() {
        let d = PiecewiseDensity::step(&[0.3], &[2.0, 4.0 / 7.0]).unwrap();
        let a = sample(&d, 50, &mut StreamRng::seed_from_u64(5)).unwrap();
        let b = sample(&d, 50, &mut StreamRng::seed_from_u64(5)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn sub_distribution_rejected() {
        let d = PiecewiseDensity::step(&[0.5], &[1.0, 0.0]).unwrap();
        assert!(matches!(
            sample(&d, 3, &mut StreamRng::seed_from_u64(0)),
            Err(Error::NotADistribution { .. })
        ));
    }

    #[test]
    fn vec_source_exhausts() {
        let mut s = VecSource::new(vec![0.1, 0.2, 0.3]).unwrap();
        assert_eq!(s.draw(2).unwrap(), vec![0.1, 0.2]);
        assert_eq!(
            s.draw(2),
            Err(Error::SampleExhausted {
                requested: 2,
                available: 1
            })
        );
    }

    #[test]
    fn multinomial_counts_sum() {
        let mut rng = StreamRng::seed_from_u64(3);
        let c = multinomial(1000, &[0.2, 0.0, 0.5, 0.3], &mut rng);
        assert_eq!(c.iter().sum::<u64>(), 1000);
        assert_eq!(c[1], 0);
    }

    #[test]
    fn binned_modes_agree_in_law() {
        let d = PiecewiseDensity::step(&[0.5], &[1.5, 0.5]).unwrap();
        let cuts = [0.0, 0.25, 0.5, 1.0];
        let n = 200_000;
        for binning in [Binning::Pointwise, Binning::Multinomial] {
            let mut src = TargetSource::new(&d, 9).with_binning(binning);
            let c = src.draw_binned(n, &cuts).unwrap();
            let f: Vec<f64> = c.iter().map(|&x| x as f64 / n as f64).collect();
            for (got, want) in f.iter().zip([0.375, 0.375, 0.25]) {
                assert!((got - want).abs() < 0.005, "{binning:?}: {f:?}");
            }
        }
    }

    #[test]
    fn filtered_source_removes_atoms() {
        let target = MixedDistribution::new(
            PiecewiseDensity::uniform().scaled(0.5).unwrap(),
            vec![Atom { x: 0.3, mass: 0.5 }],
        )
        .unwrap();
        let inner = TargetSource::new(&target, 4).with_binning(Binning::Multinomial);
        let mut f = FilteredSource::new(inner, &[0.3]);
        let c = f.draw_binned(100_000, &[0.0, 0.3, 1.0]).unwrap();
        assert_eq!(c.iter().sum::<u64>(), 100_000);
        assert!((c[0] as f64 / 1e5 - 0.3).abs() < 0.01);
        for _ in 0..1000 {
            assert_ne!(f.next_sample().unwrap(), 0.3);
        }
        assert!((f.acceptance_rate() - 0.5).abs() < 0.01);
    }

    #[test]
    fn filtered_source_aborts_on_pure_atom() {
        let target = MixedDistribution::new(
            PiecewiseDensity::uniform().scaled(0.0).unwrap(),
            vec![Atom { x: 0.25, mass: 1.0 }],
        )
        .unwrap();
        let mut f = FilteredSource::new(TargetSource::new(&target, 1), &[0.25]);
        assert!(matches!(f.next_sample(), Err(Error::LowAcceptance { .. })));
    }

    #[test]
    fn counting_source_records_phases() {
        let mut c = CountingSource::new(TargetSource::new(PiecewiseDensity::uniform(), 2));
        c.draw(10).unwrap();
        c.draw_binned(20, &[0.0, 1.0]).unwrap();
        let ledger = c.ledger();
        assert_eq!(ledger.phases(), vec![10, 20]);
        assert_eq!(ledger.total_draws(), 30);
        let mut f = c.fork(3).unwrap();
        f.draw(5).unwrap();
        assert_eq!(ledger.total_draws(), 35);
    }
}
