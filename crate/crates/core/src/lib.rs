//! Variable-width histogram learning in near-linear time.
//!
//! The crate learns a piecewise-constant approximation `h` of an unknown
//! distribution `p` on `[0, 1)` from i.i.d. draws, with error
//! `‖h − p‖₁ ≤ C·opt_k(p) + ε`, where `opt_k(p)` is the L1 distance from `p`
//! to the closest `k`-piece histogram.
//!
//! * [`merge`] holds the merging learner for well-behaved targets with small
//!   `opt_k`, and [`selection`] lifts it to the agnostic setting with a guess
//!   ladder and a Scheffé tournament.
//! * [`heavy`] strips heavy atoms so the learner's well-behavedness
//!   precondition holds.
//! * [`oracles`] computes ground truth (`opt_k` by dynamic programming, the
//!   `A_ℓ` distance) for tests and experiments.
//! * [`lowerbound`] simulates the hard ensemble showing that agnostic
//!   learners with `o(√N)` samples cannot beat factor 2.
//!
//! All distances are reported in L1 units unless a function says otherwise.

pub mod bench;
pub mod density;
mod error;
pub mod heavy;
pub mod lowerbound;
pub mod merge;
pub mod oracles;
pub mod par;
pub mod partition;
pub mod sample_io;
pub mod seed;
pub mod selection;
pub mod source;
pub mod targets;

pub use density::{
    alpha, discretize, flatten, l1_distance, tv_distance, Atom, DiscreteDistribution,
    EmpiricalSample, Interval, Measure, MixedDistribution, PiecewiseDensity,
};
pub use error::{Error, Result};
pub use heavy::{detect_heavy, learn_with_atoms, HeavySet};
pub use merge::{learn_wb, learner_trace, LearnerConfig, MergeState};
pub use partition::{approx_equal_partition, partition_for_learner, IntervalPartition};
pub use selection::{agnostic_learn, scheffe_select, AgnosticConfig, CandidatePool};
pub use source::{sample, SampleSource, Target, TargetSource, VecSource};
