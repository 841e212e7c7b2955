//! Deterministic seed derivation.
//!
//! Every random quantity in the crate is drawn from a ChaCha12 stream whose
//! seed is derived from a base seed plus a (stream, index) pair via SplitMix64
//! mixing. Replicates never share generator state, so parallel execution
//! order cannot change results.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

fn mix(z: u64) -> u64 {
    let mut z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive an independent sub-seed for (`base_seed`, `stream`, `index`).
pub fn derive_seed(base_seed: u64, stream: u64, index: u64) -> u64 {
    let mut s = mix(base_seed);
    s = mix(s ^ stream);
    mix(s ^ index)
}

/// Derive an independent generator for (`base_seed`, `stream`, `index`).
pub fn derive_rng(base_seed: u64, stream: u64, index: u64) -> ChaCha12Rng {
    let mut s = mix(base_seed);
    s = mix(s ^ stream);
    s = mix(s ^ index);
    let mut seed = [0u8; 32];
    for chunk in seed.chunks_exact_mut(8) {
        s = mix(s);
        chunk.copy_from_slice(&s.to_le_bytes());
    }
    ChaCha12Rng::from_seed(seed)
}
