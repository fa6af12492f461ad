//! Per-path random streams.
//!
//! Path `i` of an ensemble gets the seed `splitmix64(master + (i + 1) * φ)`,
//! which is injective in `i` for a fixed master seed, and expands it into a
//! ChaCha8 key. ChaCha is counter based, so the draw at step `k` of path `i`
//! is a pure function of `(master_seed, i, k)` regardless of scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type PathRng = ChaCha8Rng;

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 finalizer; a bijection on `u64`.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of path `index` under `master_seed`.
#[inline]
pub fn derive_path_seed(master_seed: u64, index: u64) -> u64 {
    mix64(master_seed.wrapping_add(index.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)))
}

pub fn path_rng(seed: u64) -> PathRng {
    let mut key = [0u8; 32];
    let mut state = seed;
    for chunk in key.chunks_exact_mut(8) {
        state = state.wrapping_add(GOLDEN_GAMMA);
        chunk.copy_from_slice(&mix64(state).to_le_bytes());
    }
    PathRng::from_seed(key)
}
