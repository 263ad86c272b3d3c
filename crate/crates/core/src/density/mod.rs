//! Exact arithmetic on piecewise-constant densities.
//!
//! Everything here works on closed-form representations: interval masses are
//! integrals of step functions (or point counts for empirical samples), and
//! distances are computed on the common refinement of the breakpoints, with
//! no numerical quadrature involved.

mod discrete;
mod empirical;
mod interval;
mod mixed;
mod piecewise;

pub(crate) use discrete::{midpoint_range, neumaier_sum};
pub use discrete::{DiscreteDistribution, DISCRETE_MASS_TOLERANCE};
pub use empirical::EmpiricalSample;
pub use interval::Interval;
pub use mixed::{Atom, MixedDistribution, MIXED_MASS_TOLERANCE};
pub use piecewise::{PiecewiseDensity, FULL_MASS_TOLERANCE};

use crate::error::{Error, Result};

/// Anything that assigns mass to subintervals of `[0, 1)`.
pub trait Measure {
    /// Mass of the half-open interval.
    fn mass_on(&self, interval: &Interval) -> f64;

    fn total_mass(&self) -> f64;
}

/// The flattening of `r` on a set of disjoint intervals: density
/// `r(I) / |I|` on each `I`, zero outside their union.
pub fn flatten<M: Measure + ?Sized>(r: &M, intervals: &[Interval]) -> Result<PiecewiseDensity> {
    let mut sorted = intervals.to_vec();
    sorted.sort_by(|a, b| a.lo().total_cmp(&b.lo()));
    if let Some(w) = sorted.windows(2).find(|w| w[0].hi() > w[1].lo()) {
        return Err(Error::Contract(format!(
            "intervals [{}, {}) and [{}, {}) overlap",
            w[0].lo(),
            w[0].hi(),
            w[1].lo(),
            w[1].hi()
        )));
    }
    let mut bps = vec![0.0];
    let mut vals = Vec::with_capacity(2 * sorted.len() + 1);
    for iv in &sorted {
        if iv.lo() > *bps.last().unwrap() {
            bps.push(iv.lo());
            vals.push(0.0);
        }
        bps.push(iv.hi());
        vals.push(r.mass_on(iv) / iv.len());
    }
    if *bps.last().unwrap() < 1.0 {
        bps.push(1.0);
        vals.push(0.0);
    }
    if vals.is_empty() {
        vals.push(0.0);
        bps = vec![0.0, 1.0];
    }
    PiecewiseDensity::new(bps, vals)
}

/// Merge cost of two consecutive intervals: the L1 distance between the
/// flattenings of `r` on `{I, J}` and on `{I ∪ J}`, in closed form
/// `2 |r(I)|J| - r(J)|I|| / (|I| + |J|)`.
pub fn alpha<M: Measure + ?Sized>(r: &M, i: &Interval, j: &Interval) -> Result<f64> {
    if !i.is_followed_by(j) {
        return Err(Error::Contract(format!(
            "alpha needs consecutive intervals, got [{}, {}) and [{}, {})",
            i.lo(),
            i.hi(),
            j.lo(),
            j.hi()
        )));
    }
    Ok(alpha_from_masses(
        r.mass_on(i),
        i.len(),
        r.mass_on(j),
        j.len(),
    ))
}

#[inline]
pub(crate) fn alpha_from_masses(mass_i: f64, len_i: f64, mass_j: f64, len_j: f64) -> f64 {
    2.0 * (mass_i * len_j - mass_j * len_i).abs() / (len_i + len_j)
}

/// Visits the common refinement of two step functions as
/// `(lo, hi, f_value, g_value)`.
pub(crate) fn for_each_common_piece(
    f: &PiecewiseDensity,
    g: &PiecewiseDensity,
    mut visit: impl FnMut(f64, f64, f64, f64),
) {
    let (fb, fv) = (f.breakpoints(), f.values());
    let (gb, gv) = (g.breakpoints(), g.values());
    let (mut i, mut j) = (0, 0);
    let mut lo = 0.0;
    while i < fv.len() && j < gv.len() {
        let hi = fb[i + 1].min(gb[j + 1]);
        if hi > lo {
            visit(lo, hi, fv[i], gv[j]);
        }
        lo = hi;
        if fb[i + 1] <= hi {
            i += 1;
        }
        if gb[j + 1] <= hi {
            j += 1;
        }
    }
}

/// Exact `∫ |f - g|` over `[0, 1)`.
pub fn l1_distance(f: &PiecewiseDensity, g: &PiecewiseDensity) -> f64 {
    let mut total = 0.0;
    for_each_common_piece(f, g, |lo, hi, a, b| total += (a - b).abs() * (hi - lo));
    total
}

/// Total variation distance, half the L1 distance.
pub fn tv_distance(f: &PiecewiseDensity, g: &PiecewiseDensity) -> f64 {
    l1_distance(f, g) / 2.0
}

/// Masses of `f` on the `m` cells `[i/m, (i+1)/m)`.
pub fn discretize_weights(f: &PiecewiseDensity, m: usize) -> Vec<f64> {
    (0..m)
        .map(|i| {
            let lo = i as f64 / m as f64;
            let hi = if i + 1 == m {
                1.0
            } else {
                (i + 1) as f64 / m as f64
            };
            f.cdf(hi) - f.cdf(lo)
        })
        .map(|w| w.max(0.0))
        .collect()
}

/// Discretizes a full distribution onto an `m`-cell grid.
pub fn discretize(f: &PiecewiseDensity, m: usize) -> Result<DiscreteDistribution> {
    crate::error::check_positive_count("m", m)?;
    f.require_full()?;
    let mut w = discretize_weights(f, m);
    let total = neumaier_sum(w.iter().copied());
    if (total - 1.0).abs() > DISCRETE_MASS_TOLERANCE {
        w.iter_mut().for_each(|x| *x /= total);
    }
    DiscreteDistribution::new(w)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn iv(lo: f64, hi: f64) -> Interval {
        Interval::new(lo, hi).unwrap()
    }

    // midpoint-rule quadrature of |f - g| on a fine grid, for piecewise
    // constant inputs whose breakpoints are multiples of 1/n it is exact up
    // to rounding
    fn quadrature_l1(f: &PiecewiseDensity, g: &PiecewiseDensity, n: usize) -> f64 {
        (0..n)
            .map(|i| {
                let x = (i as f64 + 0.5) / n as f64;
                (f.density_at(x) - g.density_at(x)).abs() / n as f64
            })
            .sum()
    }

    #[test]
    fn flatten_of_constant_is_itself() {
        let u = PiecewiseDensity::uniform();
        let f = flatten(&u, &[iv(0.0, 0.5), iv(0.5, 1.0)]).unwrap();
        assert!(f.values().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn flatten_partial_cover() {
        let r = PiecewiseDensity::step(&[0.25], &[2.0, 2.0 / 3.0]).unwrap();
        let f = flatten(&r, &[iv(0.0, 0.5)]).unwrap();
        // r([0, 0.5)) = 0.5 + 1/6
        let expected = (0.5 + 1.0 / 6.0) / 0.5;
        let quad: f64 = (0..1000)
            .map(|i| r.density_at((i as f64 + 0.5) / 2000.0) / 2000.0)
            .sum();
        assert!((quad / 0.5 - expected).abs() < 1e-12);
        assert!((f.density_at(0.1) - 4.0 / 3.0).abs() < 1e-15);
        assert_eq!(f.density_at(0.7), 0.0);
        assert!((f.total_mass() - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn flatten_empirical() {
        let s = EmpiricalSample::new(vec![0.1, 0.1, 0.9]).unwrap();
        let f = flatten(&s, &[iv(0.0, 0.5), iv(0.5, 1.0)]).unwrap();
        assert!((f.values()[0] - (2.0 / 3.0) / 0.5).abs() < 1e-15);
        assert!((f.values()[1] - (1.0 / 3.0) / 0.5).abs() < 1e-15);
        assert_eq!(s.mass_on(&iv(0.0, 0.5)), 2.0 / 3.0);
    }

    #[test]
    fn flatten_rejects_overlap() {
        let u = PiecewiseDensity::uniform();
        assert!(matches!(
            flatten(&u, &[iv(0.0, 0.6), iv(0.5, 1.0)]),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn alpha_examples() {
        // equal flattened densities merge losslessly
        let r = PiecewiseDensity::step(&[0.2, 0.6], &[1.0, 1.0, 1.0]).unwrap();
        assert_eq!(alpha(&r, &iv(0.0, 0.2), &iv(0.2, 0.6)).unwrap(), 0.0);

        let r = PiecewiseDensity::step(&[0.5], &[0.6, 1.4]).unwrap();
        let a = alpha(&r, &iv(0.0, 0.5), &iv(0.5, 1.0)).unwrap();
        assert!((a - 0.4).abs() < 1e-15);
        let two = flatten(&r, &[iv(0.0, 0.5), iv(0.5, 1.0)]).unwrap();
        let one = flatten(&r, &[iv(0.0, 1.0)]).unwrap();
        assert!((quadrature_l1(&two, &one, 1 << 12) - 0.4).abs() < 1e-12);

        let r = PiecewiseDensity::step(&[0.25], &[0.0, 4.0 / 3.0]).unwrap();
        let a = alpha(&r, &iv(0.0, 0.25), &iv(0.25, 1.0)).unwrap();
        assert!((a - 0.5).abs() < 1e-15);
        let two = flatten(&r, &[iv(0.0, 0.25), iv(0.25, 1.0)]).unwrap();
        let one = flatten(&r, &[iv(0.0, 1.0)]).unwrap();
        assert!((quadrature_l1(&two, &one, 1 << 12) - 0.5).abs() < 1e-12);

        assert!(alpha(&r, &iv(0.0, 0.25), &iv(0.3, 1.0)).is_err());
    }

    #[test]
    fn l1_examples() {
        let u = PiecewiseDensity::uniform();
        assert_eq!(l1_distance(&u, &u), 0.0);
        let g = PiecewiseDensity::step(&[0.5], &[1.5, 0.5]).unwrap();
        assert_eq!(l1_distance(&u, &g), 0.5);
        assert_eq!(tv_distance(&u, &g), 0.25);
        let a = PiecewiseDensity::step(&[0.5], &[2.0, 0.0]).unwrap();
        let b = PiecewiseDensity::step(&[0.5], &[0.0, 2.0]).unwrap();
        assert_eq!(l1_distance(&a, &b), 2.0);
    }

    #[test]
    fn discretize_examples() {
        let u = discretize(&PiecewiseDensity::uniform(), 4).unwrap();
        assert_eq!(u.weights(), &[0.25; 4]);
        let h = PiecewiseDensity::step(&[0.5], &[2.0, 0.0]).unwrap();
        assert_eq!(discretize(&h, 2).unwrap().weights(), &[1.0, 0.0]);
        let g = PiecewiseDensity::step(&[0.5], &[1.5, 0.5]).unwrap();
        assert_eq!(
            discretize(&g, 4).unwrap().weights(),
            &[0.375, 0.375, 0.125, 0.125]
        );
        let sub = PiecewiseDensity::step(&[0.5], &[1.0, 0.0]).unwrap();
        assert!(discretize(&sub, 4).is_err());
    }
}
