use serde::Serialize;

use crate::density::PiecewiseDensity;
use crate::error::{check_positive_count, Result};
use crate::oracles::a_ell_distance_empirical;
use crate::seed::stream_rng;
use crate::source::sample;

/// Monte Carlo estimate of `E‖f − f̂_m‖_{A_ℓ}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeResult {
    pub m: usize,
    pub ell: usize,
    pub mean: f64,
    pub std_err: f64,
    pub values: Vec<f64>,
}

/// Averages the `A_ℓ` distance between `f` and `trials` independent
/// empirical distributions of size `m`. Trial `i` uses stream `[i]` below
/// `seed`.
pub fn vc_concentration_probe(
    f: &PiecewiseDensity,
    m: usize,
    ell: usize,
    trials: usize,
    seed: u64,
) -> Result<ProbeResult> {
    check_positive_count("m", m)?;
    check_positive_count("ell", ell)?;
    check_positive_count("trials", trials)?;
    f.require_full()?;
    let values = crate::par::try_map_indexed(trials, |i| {
        let mut rng = stream_rng(seed, &[i as u64]);
        let s = sample(f, m, &mut rng)?;
        Ok::<_, crate::Error>(a_ell_distance_empirical(f, &s, ell))
    })?;
    let n = trials as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    Ok(ProbeResult {
        m,
        ell,
        mean,
        std_err: (var / n).sqrt(),
        values,
    })
}
