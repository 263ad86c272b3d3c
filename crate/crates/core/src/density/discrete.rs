use super::{Interval, Measure, PiecewiseDensity};
use crate::error::{Error, Result};

/// Tolerance on the total weight of a discrete distribution.
pub const DISCRETE_MASS_TOLERANCE: f64 = 1e-12;

/// Probability vector over the domain `{0, ..., M - 1}`.
///
/// Atom `i` embeds into `[0, 1)` at the cell midpoint `(i + 0.5) / M`, so
/// sampled points never land on grid breakpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDistribution {
    weights: Vec<f64>,
    // cumulative[i] = weight of atoms 0..i
    cumulative: Vec<f64>,
}

/// Compensated (Neumaier) sum.
pub(crate) fn neumaier_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

impl DiscreteDistribution {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::Contract("empty probability vector".into()));
        }
        if let Some((i, w)) = weights
            .iter()
            .enumerate()
            .find(|(_, w)| !(w.is_finite() && **w >= 0.0))
        {
            return Err(Error::Contract(format!("weight {i} = {w} is invalid")));
        }
        let total = neumaier_sum(weights.iter().copied());
        if (total - 1.0).abs() > DISCRETE_MASS_TOLERANCE {
            return Err(Error::NotADistribution { mass: total });
        }
        let mut cumulative = Vec::with_capacity(weights.len() + 1);
        let mut acc = 0.0;
        cumulative.push(0.0);
        for w in &weights {
            acc += w;
            cumulative.push(acc);
        }
        Ok(Self {
            weights,
            cumulative,
        })
    }

    pub fn uniform(size: usize) -> Result<Self> {
        if size == 0 {
            return Err(Error::Contract("empty domain".into()));
        }
        Self::new(vec![1.0 / size as f64; size])
    }

    /// Domain size `M`.
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn midpoint(&self, index: usize) -> f64 {
        (index as f64 + 0.5) / self.len() as f64
    }

    /// Atom index of a uniform variate `u` in `[0, 1)` by inverse CDF.
    pub(crate) fn index_for(&self, u: f64) -> usize {
        let total = self.cumulative[self.len()];
        let target = u * total;
        let j = self.cumulative[1..].partition_point(|&c| c <= target);
        if j >= self.len() {
            self.weights.iter().rposition(|&w| w > 0.0).unwrap_or(0)
        } else {
            j
        }
    }

    /// Elementwise L1 distance; domains must have equal size.
    pub fn l1_distance(&self, other: &DiscreteDistribution) -> Result<f64> {
        if self.len() != other.len() {
            return Err(Error::Contract(format!(
                "domain sizes differ: {} vs {}",
                self.len(),
                other.len()
            )));
        }
        Ok(neumaier_sum(
            self.weights
                .iter()
                .zip(&other.weights)
                .map(|(a, b)| (a - b).abs()),
        ))
    }

    /// The grid histogram with density `M * w_i` on cell `i`.
    pub fn to_piecewise(&self) -> PiecewiseDensity {
        let m = self.len() as f64;
        PiecewiseDensity::on_grid(self.weights.iter().map(|w| w * m).collect())
            .expect("grid histogram of a valid distribution")
    }

    fn atoms_in(&self, interval: &Interval) -> (usize, usize) {
        midpoint_range(self.len(), interval)
    }
}

/// Range of cell indices of an `size`-cell grid whose midpoints fall in
/// `interval`.
pub(crate) fn midpoint_range(size: usize, interval: &Interval) -> (usize, usize) {
    let m = size as f64;
    let mid = |i: usize| (i as f64 + 0.5) / m;
    // midpoint (i + 0.5) / M >= x  <=>  i >= x * M - 0.5
    let first = |x: f64| {
        let mut i = ((x * m - 0.5).ceil().max(0.0) as usize).min(size);
        while i > 0 && mid(i - 1) >= x {
            i -= 1;
        }
        while i < size && mid(i) < x {
            i += 1;
        }
        i
    };
    (first(interval.lo()), first(interval.hi()))
}

impl Measure for DiscreteDistribution {
    /// Mass of the midpoint embedding on `interval`.
    fn mass_on(&self, interval: &Interval) -> f64 {
        let (a, b) = self.atoms_in(interval);
        if b <= a {
            0.0
        } else {
            (self.cumulative[b] - self.cumulative[a]).max(0.0)
        }
    }

    fn total_mass(&self) -> f64 {
        self.cumulative[self.len()]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validates_total() {
        assert!(DiscreteDistribution::new(vec![0.5, 0.5]).is_ok());
        assert!(DiscreteDistribution::new(vec![0.5, 0.6]).is_err());
        assert!(DiscreteDistribution::new(vec![1.5, -0.5]).is_err());
        assert!(DiscreteDistribution::new(vec![]).is_err());
    }

    #[test]
    fn midpoint_embedding_mass() {
        let d = DiscreteDistribution::new(vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        // midpoints 0.125, 0.375, 0.625, 0.875
        let m = |lo, hi| d.mass_on(&Interval::new(lo, hi).unwrap());
        assert!((m(0.0, 0.5) - 0.3).abs() < 1e-15);
        assert!((m(0.375, 0.625) - 0.2).abs() < 1e-15);
        assert!((m(0.376, 1.0) - 0.7).abs() < 1e-15);
        assert_eq!(m(0.0, 0.125), 0.0);
    }

    #[test]
    fn neumaier_is_accurate() {
        let v = vec![1.0, 1e100, 1.0, -1e100];
        assert_eq!(neumaier_sum(v), 2.0);
    }
}
