use super::{Interval, Measure};
use crate::error::{Error, Result};

/// Sorted multiset of draws in `[0, 1)`; the empirical distribution of a
/// sample.
///
/// Interval masses are answered by binary search on the sorted points.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalSample {
    points: Vec<f64>,
}

impl EmpiricalSample {
    pub fn new(mut points: Vec<f64>) -> Result<Self> {
        for (i, x) in points.iter_mut().enumerate() {
            if !(x.is_finite() && (0.0..1.0).contains(x)) {
                return Err(Error::Contract(format!(
                    "sample point {i} = {x} lies outside [0, 1)"
                )));
            }
            // -0.0 and 0.0 must compare bit-equal downstream
            *x += 0.0;
        }
        points.sort_unstable_by(f64::total_cmp);
        Ok(Self { points })
    }

    /// Number of draws `m`, counting duplicates.
    pub fn m(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    /// Number of points in `[lo, hi)`.
    pub fn count_in(&self, interval: &Interval) -> usize {
        let a = self.points.partition_point(|&x| x < interval.lo());
        let b = self.points.partition_point(|&x| x < interval.hi());
        b - a
    }

    /// Distinct values with their multiplicities, in increasing order.
    pub fn runs(&self) -> Vec<(f64, usize)> {
        let mut out: Vec<(f64, usize)> = Vec::new();
        for &x in &self.points {
            match out.last_mut() {
                Some((v, c)) if v.to_bits() == x.to_bits() => *c += 1,
                _ => out.push((x, 1)),
            }
        }
        out
    }
}

impl Measure for EmpiricalSample {
    fn mass_on(&self, interval: &Interval) -> f64 {
        if self.points.is_empty() {
            return 0.0;
        }
        self.count_in(interval) as f64 / self.m() as f64
    }

    fn total_mass(&self) -> f64 {
        if self.points.is_empty() {
            0.0
        } else {
            1.0
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fractions_of_points() {
        let s = EmpiricalSample::new(vec![0.9, 0.2, 0.8, 0.2]).unwrap();
        assert_eq!(s.points(), &[0.2, 0.2, 0.8, 0.9]);
        assert_eq!(s.mass_on(&Interval::new(0.0, 0.5).unwrap()), 0.5);
        assert_eq!(s.mass_on(&Interval::new(0.2, 0.8).unwrap()), 0.5);
        assert_eq!(s.runs(), vec![(0.2, 2), (0.8, 1), (0.9, 1)]);
    }

    #[test]
    fn rejects_out_of_domain() {
        assert!(EmpiricalSample::new(vec![1.0]).is_err());
        assert!(EmpiricalSample::new(vec![-0.1]).is_err());
        assert!(EmpiricalSample::new(vec![f64::NAN]).is_err());
        let z = EmpiricalSample::new(vec![-0.0]).unwrap();
        assert_eq!(z.points()[0].to_bits(), 0.0f64.to_bits());
    }
}
