//! Counter-based seed splitting.
//!
//! Every random stream in the crate descends from one 64-bit root seed. A
//! child stream is identified by a path of integers (for example
//! `[STAGE_ONE, guess, repetition]`) and its seed is obtained by folding the
//! path into the root with the SplitMix64 finalizer:
//!
//! ```text
//! h0 = mix(root)
//! h_{i+1} = mix(h_i ^ mix(path[i] + GOLDEN * (i + 1)))
//! ```
//!
//! Because child seeds depend only on `(root, path)`, serial and parallel
//! executions of the same experiment consume identical streams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator used for every seeded stream in the crate.
pub type StreamRng = ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives the seed of the child stream at `path` below `root`.
pub fn split_seed(root: u64, path: &[u64]) -> u64 {
    path.iter().enumerate().fold(mix(root), |h, (i, &p)| {
        mix(h ^ mix(p.wrapping_add(GOLDEN.wrapping_mul(i as u64 + 1))))
    })
}

/// Builds the generator for the child stream at `path` below `root`.
pub fn stream_rng(root: u64, path: &[u64]) -> StreamRng {
    StreamRng::seed_from_u64(split_seed(root, path))
}
