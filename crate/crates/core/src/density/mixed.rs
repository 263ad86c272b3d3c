use serde::{Deserialize, Serialize};

use super::{l1_distance, Interval, Measure, PiecewiseDensity};
use crate::error::{Error, Result};

/// Tolerance on the total mass of a histogram-plus-atoms distribution.
pub const MIXED_MASS_TOLERANCE: f64 = 1e-6;

/// Point mass at `x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub x: f64,
    pub mass: f64,
}

/// A distribution with a histogram part and a finite atomic part.
///
/// The histogram is stored unnormalized: its total mass plus the atom masses
/// is 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MixedRepr", into = "MixedRepr")]
pub struct MixedDistribution {
    histogram: PiecewiseDensity,
    atoms: Vec<Atom>,
}

#[derive(Serialize, Deserialize)]
struct MixedRepr {
    histogram: PiecewiseDensity,
    atoms: Vec<Atom>,
}

impl TryFrom<MixedRepr> for MixedDistribution {
    type Error = Error;

    fn try_from(r: MixedRepr) -> Result<Self> {
        MixedDistribution::new(r.histogram, r.atoms)
    }
}

impl From<MixedDistribution> for MixedRepr {
    fn from(m: MixedDistribution) -> Self {
        MixedRepr {
            histogram: m.histogram,
            atoms: m.atoms,
        }
    }
}

impl MixedDistribution {
    pub fn new(histogram: PiecewiseDensity, mut atoms: Vec<Atom>) -> Result<Self> {
        for a in &mut atoms {
            if !(a.x.is_finite() && (0.0..1.0).contains(&a.x)) {
                return Err(Error::Contract(format!(
                    "atom at {} lies outside [0, 1)",
                    a.x
                )));
            }
            if !(a.mass.is_finite() && a.mass >= 0.0) {
                return Err(Error::Contract(format!("atom mass {} is invalid", a.mass)));
            }
            a.x += 0.0;
        }
        atoms.sort_by(|a, b| a.x.total_cmp(&b.x));
        if atoms
            .windows(2)
            .any(|w| w[0].x.to_bits() == w[1].x.to_bits())
        {
            return Err(Error::Contract("atom locations must be distinct".into()));
        }
        let total = histogram.total_mass() + atoms.iter().map(|a| a.mass).sum::<f64>();
        if (total - 1.0).abs() > MIXED_MASS_TOLERANCE {
            return Err(Error::NotADistribution { mass: total });
        }
        Ok(Self { histogram, atoms })
    }

    /// A purely continuous distribution.
    pub fn continuous(histogram: PiecewiseDensity) -> Result<Self> {
        Self::new(histogram, Vec::new())
    }

    pub fn histogram(&self) -> &PiecewiseDensity {
        &self.histogram
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn atom_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.mass).sum()
    }

    /// Exact L1 distance: histogram parts plus atom-by-atom differences.
    pub fn l1_distance(&self, other: &MixedDistribution) -> f64 {
        let mut atomic = 0.0;
        let (mut i, mut j) = (0, 0);
        while i < self.atoms.len() || j < other.atoms.len() {
            match (self.atoms.get(i), other.atoms.get(j)) {
                (Some(a), Some(b)) if a.x.to_bits() == b.x.to_bits() => {
                    atomic += (a.mass - b.mass).abs();
                    i += 1;
                    j += 1;
                }
                (Some(a), Some(b)) if a.x < b.x => {
                    atomic += a.mass;
                    i += 1;
                }
                (Some(_), Some(b)) => {
                    atomic += b.mass;
                    j += 1;
                }
                (Some(a), None) => {
                    atomic += a.mass;
                    i += 1;
                }
                (None, Some(b)) => {
                    atomic += b.mass;
                    j += 1;
                }
                (None, None) => unreachable!(),
            }
        }
        l1_distance(&self.histogram, &other.histogram) + atomic
    }
}

impl Measure for MixedDistribution {
    fn mass_on(&self, interval: &Interval) -> f64 {
        self.histogram.mass_on(interval)
            + self
                .atoms
                .iter()
                .filter(|a| interval.contains(a.x))
                .map(|a| a.mass)
                .sum::<f64>()
    }

    fn total_mass(&self) -> f64 {
        self.histogram.total_mass() + self.atom_mass()
    }
}
