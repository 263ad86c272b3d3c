use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Half-open interval `[lo, hi)` inside `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 2]", into = "[f64; 2]")]
pub struct Interval {
    lo: f64,
    hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if lo.is_finite() && hi.is_finite() && 0.0 <= lo && lo < hi && hi <= 1.0 {
            Ok(Self { lo, hi })
        } else {
            Err(Error::Contract(format!(
                "[{lo}, {hi}) is not a nonempty subinterval of [0, 1)"
            )))
        }
    }

    /// The whole domain `[0, 1)`.
    pub const fn unit() -> Self {
        Self { lo: 0.0, hi: 1.0 }
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x < self.hi
    }

    /// True when `next` starts exactly where `self` ends.
    pub fn is_followed_by(&self, next: &Interval) -> bool {
        self.hi == next.lo
    }

    /// Union of two consecutive intervals.
    pub fn merge(&self, next: &Interval) -> Result<Interval> {
        if !self.is_followed_by(next) {
            return Err(Error::Contract(format!(
                "intervals [{}, {}) and [{}, {}) are not consecutive",
                self.lo, self.hi, next.lo, next.hi
            )));
        }
        Ok(Interval {
            lo: self.lo,
            hi: next.hi,
        })
    }
}

impl TryFrom<[f64; 2]> for Interval {
    type Error = Error;

    fn try_from([lo, hi]: [f64; 2]) -> Result<Self> {
        Interval::new(lo, hi)
    }
}

impl From<Interval> for [f64; 2] {
    fn from(iv: Interval) -> Self {
        [iv.lo, iv.hi]
    }
}
