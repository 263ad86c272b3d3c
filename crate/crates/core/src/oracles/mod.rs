//! Ground truth for tests and experiments.
//!
//! [`opt_k_exact`] brackets `opt_k` by dynamic programming,
//! [`a_ell_distance`] computes the distance over unions of `ℓ` intervals,
//! and [`vc_concentration_probe`] measures how fast empirical distributions
//! converge in that distance.

mod adist;
mod optk;
mod probe;

pub use adist::{a_ell_distance, a_ell_distance_empirical, max_disjoint_runs};
pub use optk::{opt_k_discrete, opt_k_exact, OptKResult, DOMAIN_CAP};
pub use probe::{vc_concentration_probe, ProbeResult};
