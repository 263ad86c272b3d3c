//! Approximately-equal-mass partitions of `[0, 1)` from order statistics.

use serde::{Deserialize, Serialize};

use crate::density::Interval;
use crate::error::{check_open_unit, check_positive_count, Error, Result};
use crate::source::SampleSource;

/// Default sample-size constant of the partitioner.
pub const DEFAULT_C0: f64 = 16.0;

/// An ordered cover of `[0, 1)` by disjoint half-open intervals
/// `[cuts[j - 1], cuts[j])`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct IntervalPartition {
    cuts: Vec<f64>,
}

impl IntervalPartition {
    pub fn new(cuts: Vec<f64>) -> Result<Self> {
        if cuts.len() < 2 || cuts[0] != 0.0 || *cuts.last().unwrap() != 1.0 {
            return Err(Error::Contract(
                "partition cuts must start at 0 and end at 1".into(),
            ));
        }
        if cuts
            .windows(2)
            .any(|w| w[0].partial_cmp(&w[1]) != Some(std::cmp::Ordering::Less))
        {
            return Err(Error::Contract(
                "partition cuts must be strictly increasing".into(),
            ));
        }
        Ok(Self { cuts })
    }

    /// The one-interval partition `{[0, 1)}`.
    pub fn trivial() -> Self {
        Self {
            cuts: vec![0.0, 1.0],
        }
    }

    pub fn cuts(&self) -> &[f64] {
        &self.cuts
    }

    /// Number of intervals.
    pub fn len(&self) -> usize {
        self.cuts.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn intervals(&self) -> Vec<Interval> {
        self.cuts
            .windows(2)
            .map(|w| Interval::new(w[0], w[1]).expect("cuts are strictly increasing"))
            .collect()
    }
}

impl TryFrom<Vec<f64>> for IntervalPartition {
    type Error = Error;

    fn try_from(cuts: Vec<f64>) -> Result<Self> {
        Self::new(cuts)
    }
}

impl From<IntervalPartition> for Vec<f64> {
    fn from(p: IntervalPartition) -> Self {
        p.cuts
    }
}

/// A partition together with how it was obtained.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionDraw {
    pub partition: IntervalPartition,
    /// Points drawn from the source.
    pub draws: usize,
    /// Order statistics skipped because they repeated an earlier cut. A
    /// nonzero count means the sample has repeated values, so the target is
    /// probably not well-behaved at this scale.
    pub repeated_cuts: usize,
}

/// Sample size `⌈c0 · (1/κ) · ln(1/κ)⌉`, at least 1.
pub fn partition_sample_size(kappa: f64, c0: f64) -> usize {
    let inv = 1.0 / kappa;
    ((c0 * inv * inv.ln()).ceil() as usize).max(1)
}

/// Partition into intervals of mass roughly `κ` each.
///
/// Draws `m₀ = ⌈C₀ (1/κ) ln(1/κ)⌉` points and cuts at every
/// `⌈κ m₀⌉`-th order statistic, so each interval holds about `κ m₀` sample
/// points; the leftover points after the last full block join the final
/// interval. A cut that repeats the previous one moves right to the next
/// distinct sample value.
pub fn approx_equal_partition<S: SampleSource + ?Sized>(
    draws: &mut S,
    kappa: f64,
) -> Result<IntervalPartition> {
    Ok(approx_equal_partition_with(draws, kappa, DEFAULT_C0)?.partition)
}

/// [`approx_equal_partition`] with an explicit sample constant and
/// diagnostics.
pub fn approx_equal_partition_with<S: SampleSource + ?Sized>(
    draws: &mut S,
    kappa: f64,
    c0: f64,
) -> Result<PartitionDraw> {
    check_open_unit("kappa", kappa)?;
    if c0.is_nan() || c0 <= 0.0 {
        return Err(Error::InvalidParameter {
            name: "c0",
            value: c0,
            expected: "a positive constant",
        });
    }
    let m0 = partition_sample_size(kappa, c0);
    let mut points = draws.draw(m0)?;
    // a capped source may return fewer points than requested
    let drawn = points.len();
    points.sort_unstable_by(f64::total_cmp);
    let step = ((kappa * m0 as f64).ceil() as usize).max(1);
    let (cuts, repeated_cuts) = cuts_from_sorted(&points, step);
    Ok(PartitionDraw {
        partition: IntervalPartition::new(cuts)?,
        draws: drawn,
        repeated_cuts,
    })
}

/// Cuts at order statistics `step, 2·step, …` of a sorted sample, leaving at
/// least `step` points in the last interval.
pub(crate) fn cuts_from_sorted(sorted: &[f64], step: usize) -> (Vec<f64>, usize) {
    let mut cuts = vec![0.0];
    let mut repeated = 0;
    let mut idx = step;
    while idx + step <= sorted.len() {
        let last = *cuts.last().unwrap();
        let mut at = idx;
        if sorted[at] <= last {
            repeated += 1;
            at = sorted.partition_point(|&x| x <= last);
            if at >= sorted.len() {
                break;
            }
        }
        cuts.push(sorted[at]);
        idx = (idx + step).max(at + 1);
    }
    cuts.push(1.0);
    (cuts, repeated)
}

/// First stage of the learner: a partition with interval masses in
/// `[ε′/12k, ε′/2k]`, using `κ = ε′/(6k)`.
pub fn partition_for_learner<S: SampleSource + ?Sized>(
    draws: &mut S,
    k: usize,
    eps_prime: f64,
) -> Result<IntervalPartition> {
    check_positive_count("k", k)?;
    check_open_unit("eps_prime", eps_prime)?;
    approx_equal_partition(draws, learner_kappa(k, eps_prime))
}

pub(crate) fn learner_kappa(k: usize, eps_prime: f64) -> f64 {
    (eps_prime / (6.0 * k as f64)).min(0.5)
}
