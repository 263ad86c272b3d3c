use serde::{Deserialize, Serialize};

use super::{Interval, Measure};
use crate::error::{Error, Result};

/// Mass tolerance for treating a density as a full probability distribution.
pub const FULL_MASS_TOLERANCE: f64 = 1e-9;

/// Nonnegative piecewise-constant function on `[0, 1)`.
///
/// `values[i]` is the density on `[breakpoints[i], breakpoints[i + 1])`.
/// Zero-width pieces are dropped at construction, so breakpoints are
/// strictly increasing. Densities whose total mass is not 1 are valid
/// sub-distributions; [`PiecewiseDensity::is_full_distribution`] tells them
/// apart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DensityRepr", into = "DensityRepr")]
pub struct PiecewiseDensity {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
    // cumulative[i] = mass of [0, breakpoints[i])
    cumulative: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct DensityRepr {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
}

impl TryFrom<DensityRepr> for PiecewiseDensity {
    type Error = Error;

    fn try_from(repr: DensityRepr) -> Result<Self> {
        PiecewiseDensity::new(repr.breakpoints, repr.values)
    }
}

impl From<PiecewiseDensity> for DensityRepr {
    fn from(d: PiecewiseDensity) -> Self {
        DensityRepr {
            breakpoints: d.breakpoints,
            values: d.values,
        }
    }
}

impl PiecewiseDensity {
    pub fn new(breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if breakpoints.len() != values.len() + 1 || values.is_empty() {
            return Err(Error::Contract(format!(
                "{} breakpoints cannot delimit {} pieces",
                breakpoints.len(),
                values.len()
            )));
        }
        if breakpoints[0] != 0.0 || *breakpoints.last().unwrap() != 1.0 {
            return Err(Error::Contract(
                "breakpoints must start at 0 and end at 1".into(),
            ));
        }
        let mut bps = Vec::with_capacity(breakpoints.len());
        let mut vals = Vec::with_capacity(values.len());
        bps.push(0.0);
        for (i, &v) in values.iter().enumerate() {
            let (lo, hi) = (breakpoints[i], breakpoints[i + 1]);
            if !hi.is_finite() || hi < lo {
                return Err(Error::Contract(format!(
                    "breakpoints decrease at index {}: {lo} then {hi}",
                    i + 1
                )));
            }
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Contract(format!(
                    "density value {v} at piece {i} is not a finite nonnegative number"
                )));
            }
            if hi > lo {
                bps.push(hi);
                vals.push(v);
            }
        }
        Ok(Self::from_parts(bps, vals))
    }

    fn from_parts(breakpoints: Vec<f64>, values: Vec<f64>) -> Self {
        let mut cumulative = Vec::with_capacity(breakpoints.len());
        let mut acc = 0.0;
        cumulative.push(0.0);
        for (w, v) in breakpoints.windows(2).zip(&values) {
            acc += (w[1] - w[0]) * v;
            cumulative.push(acc);
        }
        Self {
            breakpoints,
            values,
            cumulative,
        }
    }

    /// Density 1 on `[0, 1)`.
    pub fn uniform() -> Self {
        Self::from_parts(vec![0.0, 1.0], vec![1.0])
    }

    /// Builds a step function from its interior breakpoints and levels.
    pub fn step(interior: &[f64], levels: &[f64]) -> Result<Self> {
        let mut bps = Vec::with_capacity(interior.len() + 2);
        bps.push(0.0);
        bps.extend_from_slice(interior);
        bps.push(1.0);
        Self::new(bps, levels.to_vec())
    }

    /// Histogram on the regular grid of `values.len()` cells.
    pub fn on_grid(values: Vec<f64>) -> Result<Self> {
        let n = values.len();
        let bps = (0..=n).map(|i| i as f64 / n as f64).collect();
        Self::new(bps, values)
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Number of constant pieces.
    pub fn pieces(&self) -> usize {
        self.values.len()
    }

    /// Iterates over `(lo, hi, density)` triples.
    pub fn iter_pieces(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.breakpoints
            .windows(2)
            .zip(&self.values)
            .map(|(w, &v)| (w[0], w[1], v))
    }

    pub fn total_mass(&self) -> f64 {
        *self.cumulative.last().unwrap()
    }

    pub fn is_full_distribution(&self) -> bool {
        (self.total_mass() - 1.0).abs() <= FULL_MASS_TOLERANCE
    }

    pub(crate) fn require_full(&self) -> Result<()> {
        if self.is_full_distribution() {
            Ok(())
        } else {
            Err(Error::NotADistribution {
                mass: self.total_mass(),
            })
        }
    }

    fn piece_index(&self, x: f64) -> usize {
        // last breakpoint <= x, clamped to a valid piece
        let idx = self.breakpoints.partition_point(|&b| b <= x);
        idx.saturating_sub(1).min(self.values.len() - 1)
    }

    /// Density value at `x`; zero outside `[0, 1)`.
    pub fn density_at(&self, x: f64) -> f64 {
        if !(0.0..1.0).contains(&x) {
            return 0.0;
        }
        self.values[self.piece_index(x)]
    }

    /// Mass of `[0, x)`.
    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        if x >= 1.0 {
            return self.total_mass();
        }
        let j = self.piece_index(x);
        self.cumulative[j] + (x - self.breakpoints[j]) * self.values[j]
    }

    /// Same breakpoints, every density multiplied by `factor >= 0`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(factor.is_finite() && factor >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "factor",
                value: factor,
                expected: "a finite nonnegative scale",
            });
        }
        Ok(Self::from_parts(
            self.breakpoints.clone(),
            self.values.iter().map(|v| v * factor).collect(),
        ))
    }

    /// Rescales to total mass 1.
    pub fn normalized(&self) -> Result<Self> {
        let mass = self.total_mass();
        if mass <= 0.0 {
            return Err(Error::NotADistribution { mass });
        }
        self.scaled(1.0 / mass)
    }

    /// Inverse CDF of the normalized density at `u` in `[0, 1)`.
    pub(crate) fn quantile_normalized(&self, u: f64) -> f64 {
        let target = u * self.total_mass();
        // first piece whose cumulative end exceeds the target; zero-mass
        // pieces are never selected
        let mut j = self.cumulative[1..].partition_point(|&c| c <= target);
        if j >= self.values.len() {
            j = self.values.iter().rposition(|&v| v > 0.0).unwrap_or(0);
        }
        let (lo, hi, v) = (self.breakpoints[j], self.breakpoints[j + 1], self.values[j]);
        if v <= 0.0 {
            return lo;
        }
        let x = lo + (target - self.cumulative[j]) / v;
        if x >= hi {
            hi.next_down()
        } else {
            x.max(lo)
        }
    }
}

impl Measure for PiecewiseDensity {
    fn mass_on(&self, interval: &Interval) -> f64 {
        (self.cdf(interval.hi()) - self.cdf(interval.lo())).max(0.0)
    }

    fn total_mass(&self) -> f64 {
        PiecewiseDensity::total_mass(self)
    }
}
