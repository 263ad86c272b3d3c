//! Heavy atoms: detection and the learner wrapper that removes them.
//!
//! The merging learner needs a well-behaved target, one where no single
//! point carries more than a tiny mass. Point masses above that scale are
//! found by counting exact repeats in a sample, then learned separately
//! while the histogram is fitted to the conditional distribution off the
//! atoms.

use serde::Serialize;

use crate::density::{Atom, MixedDistribution, PiecewiseDensity};
use crate::error::{check_open_unit, Result};
use crate::merge::eps_prime;
use crate::selection::{agnostic_learn, AgnosticConfig, AgnosticOutcome};
use crate::source::{FilteredSource, SampleSource};

/// Default sample constant of the detector.
pub const DEFAULT_C4: f64 = 12.0;

const FILTER_TAG: u64 = 0x4845_4156;

/// Atoms reported by [`detect_heavy`], with their estimated masses.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HeavySet {
    pub atoms: Vec<Atom>,
    /// The well-behavedness scale `κ*` the detector was run at.
    pub threshold: f64,
    pub draws: usize,
}

impl HeavySet {
    pub fn locations(&self) -> Vec<f64> {
        self.atoms.iter().map(|a| a.x).collect()
    }

    /// Estimated total mass of the atoms.
    pub fn mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.mass).sum()
    }
}

/// Detector sample size `⌈C₄ (1/κ*) max(1, ln(1/κ*))⌉`.
pub fn detection_sample_size(kappa_star: f64, c4: f64) -> usize {
    let inv = 1.0 / kappa_star;
    (c4 * inv * inv.ln().max(1.0)).ceil() as usize
}

/// Reports every value repeated at least `(κ*/2)·n` times in `n` draws.
pub fn detect_heavy<S: SampleSource + ?Sized>(draws: &mut S, kappa_star: f64) -> Result<HeavySet> {
    detect_heavy_with(draws, kappa_star, DEFAULT_C4)
}

pub fn detect_heavy_with<S: SampleSource + ?Sized>(
    draws: &mut S,
    kappa_star: f64,
    c4: f64,
) -> Result<HeavySet> {
    check_open_unit("kappa_star", kappa_star)?;
    let n = detection_sample_size(kappa_star, c4);
    let mut bits: Vec<u64> = draws
        .draw(n)?
        .into_iter()
        .map(|x| (x + 0.0).to_bits())
        .collect();
    let drawn = bits.len();
    bits.sort_unstable();
    let floor = kappa_star / 2.0 * drawn as f64;
    let mut atoms = Vec::new();
    for run in bits.chunk_by(|a, b| a == b) {
        if run.len() as f64 >= floor {
            atoms.push(Atom {
                x: f64::from_bits(run[0]),
                mass: run.len() as f64 / drawn as f64,
            });
        }
    }
    atoms.sort_by(|a, b| a.x.total_cmp(&b.x));
    Ok(HeavySet {
        atoms,
        threshold: kappa_star,
        draws: drawn,
    })
}

/// Well-behavedness scale `(ε/log₂(1/ε)) / (384k)` needed by the learner.
pub fn learner_kappa_star(k: usize, eps: f64) -> f64 {
    eps_prime(eps) / (384.0 * k as f64)
}

/// Result of [`learn_with_atoms`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AtomsOutcome {
    pub mixture: MixedDistribution,
    pub heavy: HeavySet,
    /// The histogram run on the conditional distribution, absent when the
    /// atoms carry essentially all of the mass.
    pub agnostic: Option<AgnosticOutcome>,
    /// Acceptance rate of the conditional sampler.
    pub acceptance: Option<f64>,
}

/// Full pipeline: detect heavy atoms, learn the conditional distribution off
/// them, and recombine.
///
/// If the atoms' estimated mass leaves at most `ε/10` for the rest, the
/// histogram part is dropped and the atoms are renormalized. Otherwise the
/// output is `(1 − p̂(S))·h + Σ atoms`, and the conditional sampler aborts
/// with [`crate::Error::LowAcceptance`] if it keeps fewer than one draw in a
/// thousand.
pub fn learn_with_atoms<S>(config: &AgnosticConfig, draws: &mut S) -> Result<AtomsOutcome>
where
    S: SampleSource + Send + Sync,
{
    config.validate()?;
    let heavy = detect_heavy(draws, learner_kappa_star(config.k, config.eps))?;
    let atom_mass = heavy.mass();
    if heavy.atoms.is_empty() {
        let out = agnostic_learn(config, draws)?;
        return Ok(AtomsOutcome {
            mixture: MixedDistribution::continuous(out.hypothesis.clone())?,
            heavy,
            agnostic: Some(out),
            acceptance: None,
        });
    }
    if 1.0 - atom_mass <= config.eps / 10.0 {
        let atoms = heavy
            .atoms
            .iter()
            .map(|a| Atom {
                x: a.x,
                mass: a.mass / atom_mass,
            })
            .collect();
        return Ok(AtomsOutcome {
            mixture: MixedDistribution::new(PiecewiseDensity::uniform().scaled(0.0)?, atoms)?,
            heavy,
            agnostic: None,
            acceptance: None,
        });
    }
    let locations = heavy.locations();
    let (out, acceptance) = match draws.fork(FILTER_TAG) {
        Some(child) => conditional(config, FilteredSource::new(child, &locations))?,
        None => conditional(config, FilteredSource::new(&mut *draws, &locations))?,
    };
    let histogram = out.hypothesis.scaled(1.0 - atom_mass)?;
    let mixture = MixedDistribution::new(histogram, heavy.atoms.clone())?;
    Ok(AtomsOutcome {
        mixture,
        heavy,
        agnostic: Some(out),
        acceptance: Some(acceptance),
    })
}

fn conditional<S>(
    config: &AgnosticConfig,
    mut source: FilteredSource<S>,
) -> Result<(AgnosticOutcome, f64)>
where
    S: SampleSource + Send + Sync,
{
    let out = agnostic_learn(config, &mut source)?;
    Ok((out, source.acceptance_rate()))
}
