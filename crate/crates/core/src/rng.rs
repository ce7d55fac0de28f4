//! Reproducible random streams.
//!
//! Every random draw in the crate comes from a ChaCha8 stream keyed by
//! `(master_seed, domain)` and selected by a per-item stream index, so an
//! ensemble member sees the same numbers no matter which thread runs it or
//! in which order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Separates independent uses of one master seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Domain {
    WignerSampling = 1,
    FpeNoise = 2,
    QuantumJump = 3,
    Resampling = 4,
}

pub fn stream(master_seed: u64, domain: Domain, index: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&master_seed.to_le_bytes());
    key[8..16].copy_from_slice(&(domain as u64).to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(index);
    rng
}

/// Seed for a sub-experiment, e.g. the bit-"1" ensemble of a run seeded with `seed`.
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    // splitmix64 finalizer
    let mut z = seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
