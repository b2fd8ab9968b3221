//! Reproducible per-trial random streams.
//!
//! Every trial draws from its own ChaCha stream keyed by `(seed, purpose,
//! index)`, so serial and parallel runs produce identical results.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a sub-seed for one purpose of an experiment.
pub fn derive_seed(seed: u64, purpose: u64) -> u64 {
    mix64(seed ^ mix64(purpose))
}

/// The random stream for trial `index` under `seed`.
pub fn trial_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}
