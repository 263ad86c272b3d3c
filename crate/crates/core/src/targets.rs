//! Synthetic targets with known structure.
//!
//! A [`TargetSpec`] is written `kind:key=value;key=value`, for example
//! `kflat:breaks=0.5;levels=1.5,0.5` or
//! `atom-mixture:atoms=0.3@0.5;breaks=0.5;levels=2,1`. Levels are relative
//! and get normalized. Atoms are written `mass@location`.
//!
//! | kind | keys |
//! |------|------|
//! | `uniform` | |
//! | `kflat` | `breaks`, `levels` |
//! | `kflat-noise` | `breaks`, `levels`, `eta`, `cells` |
//! | `monotone` | `cells`, `ratio` |
//! | `unimodal` | `cells`, `mode`, `ratio` |
//! | `atom-mixture` | `atoms`, optional `breaks`, `levels`, `eta`, `cells` |
//! | `lowerbound` | `n`, `t` |
//!
//! `kflat-noise` splits each of `cells` equal grid cells in half and scales
//! the two halves by `1 + η` and `1 − η` in random order, so the target is
//! exactly `η` away in L1 from the underlying `k`-flat distribution, which
//! certifies `opt_k ≤ η`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::Serialize;

use crate::density::{Atom, Interval, Measure, MixedDistribution, PiecewiseDensity};
use crate::error::{Error, Result};
use crate::lowerbound::HardInstance;
use crate::seed::stream_rng;
use crate::source::Target;

/// Description of a synthetic target.
#[derive(Debug, Clone, PartialEq)]
pub enum TargetSpec {
    Uniform,
    KFlat {
        breaks: Vec<f64>,
        levels: Vec<f64>,
    },
    KFlatNoise {
        breaks: Vec<f64>,
        levels: Vec<f64>,
        eta: f64,
        cells: usize,
    },
    Monotone {
        cells: usize,
        ratio: f64,
    },
    Unimodal {
        cells: usize,
        mode: f64,
        ratio: f64,
    },
    AtomMixture {
        atoms: Vec<Atom>,
        breaks: Vec<f64>,
        levels: Vec<f64>,
        noise: Option<(f64, usize)>,
    },
    LowerBound {
        n: usize,
        t: f64,
    },
}

fn spec_err(msg: impl Into<String>) -> Error {
    Error::Parse {
        line: 1,
        message: msg.into(),
    }
}

fn parse_list(s: &str) -> Result<Vec<f64>> {
    if s.is_empty() {
        return Ok(Vec::new());
    }
    s.split(',')
        .map(|x| {
            x.trim()
                .parse::<f64>()
                .map_err(|_| spec_err(format!("`{x}` is not a number")))
        })
        .collect()
}

fn join(xs: &[f64]) -> String {
    xs.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

impl FromStr for TargetSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, rest) = s.split_once(':').unwrap_or((s, ""));
        let mut kv = BTreeMap::new();
        for part in rest.split(';').filter(|p| !p.trim().is_empty()) {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| spec_err(format!("`{part}` is not key=value")))?;
            kv.insert(k.trim().to_string(), v.trim().to_string());
        }
        let mut take = |key: &str| kv.remove(key);
        let num = |v: Option<String>, key: &str| -> Result<f64> {
            v.ok_or_else(|| spec_err(format!("missing `{key}`")))?
                .parse()
                .map_err(|_| spec_err(format!("`{key}` is not a number")))
        };
        let count = |v: Option<String>, key: &str| -> Result<usize> {
            v.ok_or_else(|| spec_err(format!("missing `{key}`")))?
                .parse()
                .map_err(|_| spec_err(format!("`{key}` is not a count")))
        };
        let spec = match kind.trim() {
            "uniform" => TargetSpec::Uniform,
            "kflat" => TargetSpec::KFlat {
                breaks: parse_list(&take("breaks").unwrap_or_default())?,
                levels: parse_list(&take("levels").ok_or_else(|| spec_err("missing `levels`"))?)?,
            },
            "kflat-noise" => TargetSpec::KFlatNoise {
                breaks: parse_list(&take("breaks").unwrap_or_default())?,
                levels: parse_list(&take("levels").ok_or_else(|| spec_err("missing `levels`"))?)?,
                eta: num(take("eta"), "eta")?,
                cells: count(take("cells"), "cells")?,
            },
            "monotone" => TargetSpec::Monotone {
                cells: count(take("cells"), "cells")?,
                ratio: num(take("ratio"), "ratio")?,
            },
            "unimodal" => TargetSpec::Unimodal {
                cells: count(take("cells"), "cells")?,
                mode: num(take("mode"), "mode")?,
                ratio: num(take("ratio"), "ratio")?,
            },
            "atom-mixture" => {
                let atoms = take("atoms")
                    .ok_or_else(|| spec_err("missing `atoms`"))?
                    .split(',')
                    .map(|a| {
                        let (mass, x) = a
                            .split_once('@')
                            .ok_or_else(|| spec_err(format!("atom `{a}` is not mass@location")))?;
                        Ok(Atom {
                            x: x.trim()
                                .parse()
                                .map_err(|_| spec_err(format!("bad atom `{a}`")))?,
                            mass: mass
                                .trim()
                                .parse()
                                .map_err(|_| spec_err(format!("bad atom `{a}`")))?,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                let noise = match take("eta") {
                    Some(eta) => Some((num(Some(eta), "eta")?, count(take("cells"), "cells")?)),
                    None => None,
                };
                TargetSpec::AtomMixture {
                    atoms,
                    breaks: parse_list(&take("breaks").unwrap_or_default())?,
                    levels: parse_list(&take("levels").unwrap_or_else(|| "1".into()))?,
                    noise,
                }
            }
            "lowerbound" => TargetSpec::LowerBound {
                n: count(take("n"), "n")?,
                t: num(take("t"), "t")?,
            },
            other => return Err(spec_err(format!("unknown target kind `{other}`"))),
        };
        if let Some(k) = kv.keys().next() {
            return Err(spec_err(format!("unknown key `{k}` for `{kind}`")));
        }
        Ok(spec)
    }
}

impl fmt::Display for TargetSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TargetSpec::Uniform => write!(f, "uniform"),
            TargetSpec::KFlat { breaks, levels } => {
                write!(f, "kflat:breaks={};levels={}", join(breaks), join(levels))
            }
            TargetSpec::KFlatNoise {
                breaks,
                levels,
                eta,
                cells,
            } => write!(
                f,
                "kflat-noise:breaks={};levels={};eta={eta};cells={cells}",
                join(breaks),
                join(levels)
            ),
            TargetSpec::Monotone { cells, ratio } => {
                write!(f, "monotone:cells={cells};ratio={ratio}")
            }
            TargetSpec::Unimodal { cells, mode, ratio } => {
                write!(f, "unimodal:cells={cells};mode={mode};ratio={ratio}")
            }
            TargetSpec::AtomMixture {
                atoms,
                breaks,
                levels,
                noise,
            } => {
                let atoms: Vec<String> = atoms
                    .iter()
                    .map(|a| format!("{}@{}", a.mass, a.x))
                    .collect();
                write!(
                    f,
                    "atom-mixture:atoms={};breaks={};levels={}",
                    atoms.join(","),
                    join(breaks),
                    join(levels)
                )?;
                if let Some((eta, cells)) = noise {
                    write!(f, ";eta={eta};cells={cells}")?;
                }
                Ok(())
            }
            TargetSpec::LowerBound { n, t } => write!(f, "lowerbound:n={n};t={t}"),
        }
    }
}

/// A realized target of any kind.
#[derive(Debug, Clone, PartialEq)]
pub enum AnyTarget {
    Piecewise(PiecewiseDensity),
    Mixed(MixedDistribution),
    Hard(HardInstance),
}

impl Measure for AnyTarget {
    fn mass_on(&self, interval: &Interval) -> f64 {
        match self {
            AnyTarget::Piecewise(p) => p.mass_on(interval),
            AnyTarget::Mixed(p) => p.mass_on(interval),
            AnyTarget::Hard(p) => p.mass_on(interval),
        }
    }

    fn total_mass(&self) -> f64 {
        match self {
            AnyTarget::Piecewise(p) => Measure::total_mass(p),
            AnyTarget::Mixed(p) => Measure::total_mass(p),
            AnyTarget::Hard(p) => p.total_mass(),
        }
    }
}

impl Target for AnyTarget {
    fn sample_point<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            AnyTarget::Piecewise(p) => p.sample_point(rng),
            AnyTarget::Mixed(p) => p.sample_point(rng),
            AnyTarget::Hard(p) => p.sample_point(rng),
        }
    }
}

/// What is known about a generated target.
#[derive(Debug, Clone, PartialEq, Serialize, Default)]
pub struct TargetMeta {
    /// Pieces of the underlying flat distribution, when there is one.
    pub pieces: Option<usize>,
    /// Certified upper bound on `opt_pieces` (L1) of the continuous part.
    pub opt_k_upper: Option<f64>,
    /// The flat distribution the continuous part was built from.
    pub base: Option<PiecewiseDensity>,
    /// The continuous part, normalized to mass 1.
    pub continuous: Option<PiecewiseDensity>,
    pub atoms: Vec<Atom>,
}

/// A target with its metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedTarget {
    pub spec: TargetSpec,
    pub target: AnyTarget,
    pub meta: TargetMeta,
}

impl GeneratedTarget {
    /// The target as a piecewise density, when it has no atoms.
    pub fn density(&self) -> Option<&PiecewiseDensity> {
        match &self.target {
            AnyTarget::Piecewise(p) => Some(p),
            _ => None,
        }
    }
}

fn flat(breaks: &[f64], levels: &[f64]) -> Result<PiecewiseDensity> {
    if levels.len() != breaks.len() + 1 {
        return Err(spec_err("`levels` needs one more entry than `breaks`"));
    }
    PiecewiseDensity::step(breaks, levels)?.normalized()
}

fn noisy<R: Rng + ?Sized>(
    base: &PiecewiseDensity,
    eta: f64,
    cells: usize,
    rng: &mut R,
) -> Result<PiecewiseDensity> {
    if !(0.0..1.0).contains(&eta) {
        return Err(Error::InvalidParameter {
            name: "eta",
            value: eta,
            expected: "a value in [0, 1)",
        });
    }
    crate::error::check_positive_count("cells", cells)?;
    let m = cells as f64;
    for &b in &base.breakpoints()[1..base.pieces()] {
        if ((b * m).round() - b * m).abs() > 1e-9 {
            return Err(spec_err(format!(
                "break {b} is not on the {cells}-cell grid"
            )));
        }
    }
    let mut bps = Vec::with_capacity(2 * cells + 1);
    let mut vals = Vec::with_capacity(2 * cells);
    for c in 0..cells {
        let lo = c as f64 / m;
        let mid = (2 * c + 1) as f64 / (2.0 * m);
        let level = base.density_at(mid);
        let (a, b) = if rng.random::<bool>() {
            (1.0 + eta, 1.0 - eta)
        } else {
            (1.0 - eta, 1.0 + eta)
        };
        bps.extend([lo, mid]);
        vals.extend([level * a, level * b]);
    }
    bps.push(1.0);
    PiecewiseDensity::new(bps, vals)
}

fn geometric(cells: usize, ratio: f64, peak: usize) -> Result<PiecewiseDensity> {
    crate::error::check_positive_count("cells", cells)?;
    if !(ratio >= 1.0 && ratio.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "ratio",
            value: ratio,
            expected: "a finite ratio >= 1",
        });
    }
    let span = (cells.max(2) - 1) as f64;
    let levels = (0..cells)
        .map(|i| ratio.powf(-((i as f64 - peak as f64).abs() / span)))
        .collect();
    PiecewiseDensity::on_grid(levels)?.normalized()
}

impl TargetSpec {
    /// Realizes the target. Only `kflat-noise`, `atom-mixture` with noise
    /// and `lowerbound` use randomness, on stream `[0]` below `seed`.
    pub fn generate(&self, seed: u64) -> Result<GeneratedTarget> {
        let mut rng = stream_rng(seed, &[0]);
        let mut meta = TargetMeta::default();
        let target = match self {
            TargetSpec::Uniform => {
                let u = PiecewiseDensity::uniform();
                meta.pieces = Some(1);
                meta.opt_k_upper = Some(0.0);
                meta.base = Some(u.clone());
                meta.continuous = Some(u.clone());
                AnyTarget::Piecewise(u)
            }
            TargetSpec::KFlat { breaks, levels } => {
                let p = flat(breaks, levels)?;
                meta.pieces = Some(levels.len());
                meta.opt_k_upper = Some(0.0);
                meta.base = Some(p.clone());
                meta.continuous = Some(p.clone());
                AnyTarget::Piecewise(p)
            }
            TargetSpec::KFlatNoise {
                breaks,
                levels,
                eta,
                cells,
            } => {
                let base = flat(breaks, levels)?;
                let p = noisy(&base, *eta, *cells, &mut rng)?;
                meta.pieces = Some(levels.len());
                meta.opt_k_upper = Some(*eta);
                meta.base = Some(base);
                meta.continuous = Some(p.clone());
                AnyTarget::Piecewise(p)
            }
            TargetSpec::Monotone { cells, ratio } => {
                let p = geometric(*cells, *ratio, 0)?;
                meta.continuous = Some(p.clone());
                AnyTarget::Piecewise(p)
            }
            TargetSpec::Unimodal { cells, mode, ratio } => {
                if !(0.0..1.0).contains(mode) {
                    return Err(Error::InvalidParameter {
                        name: "mode",
                        value: *mode,
                        expected: "a location in [0, 1)",
                    });
                }
                let peak = (mode * *cells as f64).floor() as usize;
                let p = geometric(*cells, *ratio, peak)?;
                meta.continuous = Some(p.clone());
                AnyTarget::Piecewise(p)
            }
            TargetSpec::AtomMixture {
                atoms,
                breaks,
                levels,
                noise,
            } => {
                let base = flat(breaks, levels)?;
                let cont = match noise {
                    Some((eta, cells)) => {
                        meta.opt_k_upper = Some(*eta);
                        noisy(&base, *eta, *cells, &mut rng)?
                    }
                    None => {
                        meta.opt_k_upper = Some(0.0);
                        base.clone()
                    }
                };
                let atom_mass: f64 = atoms.iter().map(|a| a.mass).sum();
                let mixed = MixedDistribution::new(cont.scaled(1.0 - atom_mass)?, atoms.clone())?;
                meta.pieces = Some(levels.len());
                meta.base = Some(base);
                meta.continuous = Some(cont);
                meta.atoms = mixed.atoms().to_vec();
                AnyTarget::Mixed(mixed)
            }
            TargetSpec::LowerBound { n, t } => {
                let h = HardInstance::sample(*n, *t, &mut rng)?;
                meta.pieces = Some(2);
                meta.opt_k_upper = Some(crate::lowerbound::witness_distance(h.t()));
                AnyTarget::Hard(h)
            }
        };
        Ok(GeneratedTarget {
            spec: self.clone(),
            target,
            meta,
        })
    }
}
