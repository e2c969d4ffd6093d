//! Counter-based random substreams.
//!
//! Every rollout, sweep sample or verification trial owns a ChaCha8 stream
//! whose 256-bit key is the tuple `(seed, domain, a, b)` laid out little-endian.
//! Streams are therefore independent of the order in which they are consumed,
//! so parallel and serial execution produce identical draws.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Stream = ChaCha8Rng;

/// FNV-1a 64-bit hash of a label.
pub fn label_hash(label: &str) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    for &b in label.as_bytes() {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x0100_0000_01b3);
    }
    hash
}

/// Stream keyed by `(seed, domain, a, b)`.
pub fn substream(seed: u64, domain: u64, a: u64, b: u64) -> Stream {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&domain.to_le_bytes());
    key[16..24].copy_from_slice(&a.to_le_bytes());
    key[24..].copy_from_slice(&b.to_le_bytes());
    ChaCha8Rng::from_seed(key)
}

/// Stream for rollout `(m, i)` of the supergroup drawn under `condition_id`.
pub fn rollout_stream(seed: u64, condition_id: &str, m: usize, i: usize) -> Stream {
    substream(seed, label_hash(condition_id), m as u64, i as u64)
}

/// SplitMix64 finaliser; used to derive per-step seeds from a run seed.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for step `step` of a run seeded with `seed`.
pub fn step_seed(seed: u64, step: u64) -> u64 {
    mix64(seed ^ mix64(step))
}
