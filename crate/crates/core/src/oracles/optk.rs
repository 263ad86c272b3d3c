use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::Serialize;

use crate::density::{l1_distance, DiscreteDistribution, PiecewiseDensity};
use crate::error::{check_positive_count, Error, Result};

/// Largest number of pieces the dynamic program accepts.
pub const DOMAIN_CAP: usize = 4096;

const FULL_SCAN_BUDGET: usize = 1 << 22;

/// Bracket on `opt_k` in L1 units.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptKResult {
    /// Best L1 error of any step function with at most `k` pieces, not
    /// necessarily a distribution. Never exceeds `opt_k`.
    pub lower: f64,
    /// L1 error of `argmin`, a `k`-flat distribution. At least `opt_k` and
    /// at most `2 · lower`.
    pub upper: f64,
    pub argmin: PiecewiseDensity,
    /// Interior breakpoints of `argmin`.
    pub breakpoints_of_q: Vec<f64>,
}

impl OptKResult {
    pub fn lower_tv(&self) -> f64 {
        self.lower / 2.0
    }

    pub fn upper_tv(&self) -> f64 {
        self.upper / 2.0
    }
}

#[derive(Clone, Copy)]
struct Cell {
    density: f64,
    width: f64,
}

impl PartialEq for Cell {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Cell {}

impl PartialOrd for Cell {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Cell {
    fn cmp(&self, other: &Self) -> Ordering {
        self.density.total_cmp(&other.density)
    }
}

/// Streaming weighted median of densities with the L1 cost around it.
#[derive(Default)]
struct MedianCost {
    low: BinaryHeap<Cell>,
    high: BinaryHeap<std::cmp::Reverse<Cell>>,
    low_w: f64,
    low_wd: f64,
    high_w: f64,
    high_wd: f64,
}

impl MedianCost {
    fn push(&mut self, c: Cell) {
        if self.low.peek().is_none_or(|top| c.density <= top.density) {
            self.low_w += c.width;
            self.low_wd += c.width * c.density;
            self.low.push(c);
        } else {
            self.high_w += c.width;
            self.high_wd += c.width * c.density;
            self.high.push(std::cmp::Reverse(c));
        }
        let half = (self.low_w + self.high_w) / 2.0;
        // keep the median on top of `low`: low holds at least half the
        // weight, and would not without its top
        while let Some(top) = self.low.peek().copied() {
            if self.low_w - top.width >= half {
                self.low.pop();
                self.low_w -= top.width;
                self.low_wd -= top.width * top.density;
                self.high_w += top.width;
                self.high_wd += top.width * top.density;
                self.high.push(std::cmp::Reverse(top));
            } else {
                break;
            }
        }
        while self.low_w < half {
            let std::cmp::Reverse(top) = self.high.pop().expect("weight is somewhere");
            self.high_w -= top.width;
            self.high_wd -= top.width * top.density;
            self.low_w += top.width;
            self.low_wd += top.width * top.density;
            self.low.push(top);
        }
    }

    fn median(&self) -> f64 {
        self.low.peek().map_or(0.0, |c| c.density)
    }

    fn cost(&self) -> f64 {
        let med = self.median();
        let c = (self.high_wd - med * self.high_w) + (med * self.low_w - self.low_wd);
        c.max(0.0)
    }
}

fn weighted_median(cells: &[Cell]) -> f64 {
    let mut sorted = cells.to_vec();
    sorted.sort();
    let total: f64 = sorted.iter().map(|c| c.width).sum();
    let mut acc = 0.0;
    for c in &sorted {
        acc += c.width;
        if acc >= total / 2.0 {
            return c.density;
        }
    }
    sorted.last().map_or(0.0, |c| c.density)
}

/// Brackets `opt_k(p)` for a piecewise-constant `p`.
///
/// The dynamic program runs over `p`'s own pieces: for a step target, an
/// optimal `k`-piece fit can always put its breakpoints on the target's, and
/// the best level of a segment is the length-weighted median of the piece
/// densities. Cost is `O(M² log M)` for the segment table plus `O(k M²)` for
/// the recursion, with `M` the number of pieces.
///
/// The unconstrained optimum gives `lower`. For `upper` the segments are
/// kept, the levels are re-fitted under the constraint of total mass 1, and
/// a short local search moves breakpoints while that helps. The result is
/// never worse than renormalizing the unconstrained fit, which is within
/// factor 2 of `lower`.
pub fn opt_k_exact(p: &PiecewiseDensity, k: usize) -> Result<OptKResult> {
    check_positive_count("k", k)?;
    p.require_full()?;
    let cells: Vec<Cell> = p
        .iter_pieces()
        .map(|(lo, hi, v)| Cell {
            density: v,
            width: hi - lo,
        })
        .collect();
    let n = cells.len();
    if n > DOMAIN_CAP {
        return Err(Error::DomainTooLarge {
            size: n,
            cap: DOMAIN_CAP,
        });
    }
    let bps = p.breakpoints();
    let k = k.min(n);

    // cost[a][b - a] is the cost of segment a..=b
    let cost: Vec<Vec<f64>> = crate::par::map_indexed(n, |a| {
        let mut acc = MedianCost::default();
        cells[a..]
            .iter()
            .map(|&c| {
                acc.push(c);
                acc.cost()
            })
            .collect()
    });

    // best[j][b]: least cost of covering cells 0..b with at most j segments
    let mut best = vec![vec![f64::INFINITY; n + 1]; k + 1];
    let mut choice = vec![vec![u32::MAX; n + 1]; k + 1];
    best[0][0] = 0.0;
    for j in 1..=k {
        best[j][0] = 0.0;
        let (done, rest) = best.split_at_mut(j);
        let prev = &done[j - 1];
        let row = &mut rest[0];
        let picks: Vec<(f64, u32)> = crate::par::map_indexed(n, |b1| {
            let b = b1 + 1;
            let mut v = prev[b];
            let mut arg = u32::MAX;
            for a in 0..b {
                let c = prev[a] + cost[a][b - 1 - a];
                if c < v {
                    v = c;
                    arg = a as u32;
                }
            }
            (v, arg)
        });
        for (b1, (v, arg)) in picks.into_iter().enumerate() {
            row[b1 + 1] = v;
            choice[j][b1 + 1] = arg;
        }
    }
    let lower = best[k][n];

    let mut segments = Vec::new();
    let (mut j, mut b) = (k, n);
    while b > 0 {
        let a = choice[j][b];
        if a == u32::MAX {
            j -= 1;
            continue;
        }
        segments.push((a as usize, b));
        b = a as usize;
        j -= 1;
    }
    segments.reverse();

    let mut ends: Vec<usize> = segments.iter().map(|s| s.1).collect();
    let mut best_cost = constrained_cost(&cells, &ends);
    // coordinate search over breakpoint positions; any feasible candidate is
    // a valid upper bound, this only tightens it. Small tables get a full
    // scan between neighbours, large ones a window of two cells.
    let full_scan = n * n * ends.len() <= FULL_SCAN_BUDGET;
    for _ in 0..4 {
        let mut improved = false;
        for i in 0..ends.len().saturating_sub(1) {
            let lo = if i == 0 { 1 } else { ends[i - 1] + 1 };
            let hi = ends[i + 1] - 1;
            let (from, to) = if full_scan {
                (lo, hi)
            } else {
                (ends[i].saturating_sub(2).max(lo), (ends[i] + 2).min(hi))
            };
            for pos in from..=to {
                if pos == ends[i] {
                    continue;
                }
                let mut trial = ends.clone();
                trial[i] = pos;
                let c = constrained_cost(&cells, &trial);
                if c < best_cost - 1e-15 {
                    best_cost = c;
                    ends = trial;
                    improved = true;
                }
            }
        }
        if !improved {
            break;
        }
    }
    let mut a_bps = vec![0.0];
    a_bps.extend(ends.iter().map(|&b| bps[b]));
    let argmin = PiecewiseDensity::new(a_bps.clone(), constrained_levels(&cells, &ends))?;
    let upper = l1_distance(p, &argmin);
    Ok(OptKResult {
        lower,
        upper,
        argmin,
        breakpoints_of_q: a_bps[1..a_bps.len() - 1].to_vec(),
    })
}

/// Best levels for fixed segments `[ends[i-1], ends[i])` subject to total
/// mass 1.
///
/// Each segment's error is convex and piecewise linear in its level, with
/// kinks at the cell densities. Starting from the medians, mass is moved in
/// the direction of the constraint through whichever segment has the
/// cheapest marginal cost per unit mass, one kink at a time.
fn constrained_levels(cells: &[Cell], ends: &[usize]) -> Vec<f64> {
    struct Seg {
        sorted: Vec<Cell>,
        cum: Vec<f64>,
        level: f64,
    }
    impl Seg {
        fn len(&self) -> f64 {
            self.cum[self.cum.len() - 1]
        }
    }
    let mut segs: Vec<Seg> = Vec::with_capacity(ends.len());
    let mut a = 0;
    for &b in ends {
        let mut sorted = cells[a..b].to_vec();
        sorted.sort();
        let mut cum = vec![0.0];
        for c in &sorted {
            cum.push(cum[cum.len() - 1] + c.width);
        }
        let level = weighted_median(&sorted);
        segs.push(Seg { sorted, cum, level });
        a = b;
    }
    let mut m: f64 = segs.iter().map(|s| s.level * s.len()).sum();
    let raise = m < 1.0;
    for _ in 0..2 * cells.len() + 4 {
        let gap = (1.0 - m).abs();
        if gap <= 1e-15 {
            break;
        }
        // marginal cost per unit of mass and distance to the next kink
        let mut pick: Option<(usize, f64, f64)> = None;
        for (i, s) in segs.iter().enumerate() {
            let len = s.len();
            let (slope, room) = if raise {
                let pos = s.sorted.partition_point(|c| c.density <= s.level);
                let next = s.sorted.get(pos).map_or(f64::INFINITY, |c| c.density);
                ((2.0 * s.cum[pos] - len) / len, next - s.level)
            } else {
                if s.level <= 0.0 {
                    continue;
                }
                let pos = s.sorted.partition_point(|c| c.density < s.level);
                let prev = if pos == 0 {
                    0.0
                } else {
                    s.sorted[pos - 1].density
                };
                ((len - 2.0 * s.cum[pos]) / len, s.level - prev)
            };
            if pick.is_none_or(|p| slope < p.1) {
                pick = Some((i, slope, room));
            }
        }
        let Some((i, _, room)) = pick else { break };
        let s = &mut segs[i];
        let want = gap / s.len();
        let step = want.min(room);
        if raise {
            s.level += step;
            m += step * s.len();
        } else {
            s.level -= step;
            m -= step * s.len();
        }
        if step >= want {
            break;
        }
    }
    // absorb rounding so the result is exactly a distribution
    let m: f64 = segs.iter().map(|s| s.level * s.len()).sum();
    segs.iter().map(|s| s.level / m).collect()
}

fn constrained_cost(cells: &[Cell], ends: &[usize]) -> f64 {
    let levels = constrained_levels(cells, ends);
    let mut a = 0;
    let mut total = 0.0;
    for (&b, &c) in ends.iter().zip(&levels) {
        total += cells[a..b]
            .iter()
            .map(|x| x.width * (x.density - c).abs())
            .sum::<f64>();
        a = b;
    }
    total
}

/// [`opt_k_exact`] for a distribution on `{1, …, M}`, through its grid
/// histogram (L1 distances between grid histograms equal those between the
/// weight vectors).
pub fn opt_k_discrete(p: &DiscreteDistribution, k: usize) -> Result<OptKResult> {
    if p.len() > DOMAIN_CAP {
        return Err(Error::DomainTooLarge {
            size: p.len(),
            cap: DOMAIN_CAP,
        });
    }
    opt_k_exact(&p.to_piecewise(), k)
}
