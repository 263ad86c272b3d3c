//! Wall-time measurements of the learner.
//!
//! Each cell times [`learn_wb`] on a `k`-flat target with a fixed empirical
//! sample size `m`, drawing and binning every point (no multinomial
//! shortcut), so the measured time includes the `O(m log z)` binning work.
//! One untimed warm-up run precedes the timed repetitions and the median is
//! reported. Runs are single-threaded.

use std::time::Instant;

use serde::Serialize;

use crate::density::PiecewiseDensity;
use crate::error::{check_open_unit, check_positive_count, Error, Result};
use crate::merge::{learn_wb, LearnerConfig};
use crate::seed::split_seed;
use crate::source::{Binning, TargetSource};

/// One grid point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BenchCell {
    pub k: usize,
    pub eps: f64,
    pub m: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub k: usize,
    pub eps: f64,
    pub m: usize,
    pub median_secs: f64,
    pub times: Vec<f64>,
    pub pieces: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    /// Least-squares slope of `ln(time)` against `ln(m)`, over rows sharing
    /// the first row's `(k, ε)`.
    pub slope: Option<f64>,
}

/// `k` equal-width pieces alternating between densities 1.5 and 0.5
/// (renormalized when `k` is odd).
pub fn bench_target(k: usize) -> PiecewiseDensity {
    let breaks: Vec<f64> = (1..k).map(|i| i as f64 / k as f64).collect();
    let levels: Vec<f64> = (0..k).map(|i| if i % 2 == 0 { 1.5 } else { 0.5 }).collect();
    PiecewiseDensity::step(&breaks, &levels)
        .and_then(|p| p.normalized())
        .expect("valid alternating target")
}

/// Median wall time of `reps` runs of one cell.
pub fn time_cell(cell: BenchCell, reps: usize, seed: u64) -> Result<BenchRow> {
    check_positive_count("k", cell.k)?;
    check_open_unit("eps", cell.eps)?;
    check_positive_count("reps", reps)?;
    let target = bench_target(cell.k);
    let config = LearnerConfig::new(cell.k, cell.eps)?.with_sample_budget(cell.m);
    let mut times = Vec::with_capacity(reps);
    let mut pieces = 0;
    for rep in 0..=reps {
        let mut src = TargetSource::new(&target, split_seed(seed, &[rep as u64]))
            .with_binning(Binning::Pointwise);
        let start = Instant::now();
        let out = learn_wb(&config, &mut src)?;
        let secs = start.elapsed().as_secs_f64();
        pieces = out.pieces();
        if rep > 0 {
            times.push(secs);
        }
    }
    let mut sorted = times.clone();
    sorted.sort_by(f64::total_cmp);
    Ok(BenchRow {
        k: cell.k,
        eps: cell.eps,
        m: cell.m,
        median_secs: sorted[sorted.len() / 2],
        times,
        pieces,
    })
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let n = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Times every cell of a grid.
pub fn run_grid(cells: &[BenchCell], reps: usize, seed: u64) -> Result<BenchReport> {
    if cells.is_empty() {
        return Err(Error::Contract("benchmark grid is empty".into()));
    }
    let rows = cells
        .iter()
        .map(|&c| time_cell(c, reps, seed))
        .collect::<Result<Vec<_>>>()?;
    let (k0, e0) = (rows[0].k, rows[0].eps);
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.k == k0 && r.eps == e0)
        .map(|r| (r.m as f64, r.median_secs))
        .collect();
    Ok(BenchReport {
        slope: loglog_slope(&pts),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_power_law() {
        let pts: Vec<(f64, f64)> = [1e3, 1e4, 1e5].iter().map(|&m| (m, 3.0 * m)).collect();
        assert!((loglog_slope(&pts).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(loglog_slope(&pts[..1]), None);
    }

    #[test]
    fn empty_grid_rejected() {
        assert!(run_grid(&[], 1, 0).is_err());
    }

    #[test]
    fn bench_target_is_normalized() {
        for k in 1..6 {
            assert!(bench_target(k).is_full_distribution());
        }
    }
}
