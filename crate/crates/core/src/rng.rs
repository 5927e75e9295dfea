//! Seeded random streams.
//!
//! Every random draw in the crate (weight init, shuffles, negative
//! downsampling, synthetic data) comes from [`stream`]: a ChaCha8 generator
//! keyed by the run seed, with a separate ChaCha stream per named purpose so
//! that adding draws to one purpose never shifts another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// FNV-1a over the label; stable across platforms and releases.
fn label_id(label: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

pub fn stream(seed: u64, label: &str) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(label_id(label));
    rng
}
