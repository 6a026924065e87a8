//! Seeded random streams. Every consumer derives its own stream from the
//! master seed and a purpose label, so adding draws in one place never shifts
//! the draws seen elsewhere.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::alphabet::Sequence;

pub type StreamRng = ChaCha8Rng;

pub fn stream(seed: u64, label: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(label);
    rng
}

/// Mixes a sub-index into a label (batch number, sequence number, ...).
pub fn sublabel(label: u64, index: u64) -> u64 {
    let mut x = label ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    x ^= x >> 31;
    x = x.wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x ^ (x >> 29)
}

pub fn uniform_sequence<R: Rng + ?Sized>(rng: &mut R, alphabet_size: usize, length: usize) -> Sequence {
    Sequence((0..length).map(|_| rng.gen_range(0..alphabet_size) as u8).collect())
}
