//! Seeded random streams.
//!
//! Every stochastic quantity is drawn from a ChaCha stream keyed by the user
//! seed plus a path of indices (trial, trajectory, step, ...), so results do
//! not depend on scheduling or on how many workers ran.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Stream = ChaCha8Rng;

/// Domain tags keep streams for different purposes disjoint.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    InitialPoint = 1,
    Noise = 2,
    Measurement = 3,
    RandomDensity = 4,
}

pub fn stream(seed: u64, purpose: Purpose, path: &[u64]) -> Stream {
    assert!(path.len() <= 2, "stream path supports at most two indices");
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&(purpose as u64).to_le_bytes());
    for (i, word) in path.iter().enumerate() {
        key[16 + 8 * i..24 + 8 * i].copy_from_slice(&word.to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}
