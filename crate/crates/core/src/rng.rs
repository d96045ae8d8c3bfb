//! Deterministic random-stream derivation.
//!
//! Every stochastic step draws from a ChaCha stream derived from
//! (master seed, stream tag, index). Parallel and serial execution therefore
//! agree bit-for-bit: a sample's noise never depends on scheduling order.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// Stream tags keep independent uses of the same (seed, index) pair apart.
pub mod stream {
    pub const PILOT: u64 = 0x01;
    pub const UPLINK_NOISE: u64 = 0x02;
    pub const AUGMENT: u64 = 0x03;
    pub const WEIGHT_INIT: u64 = 0x04;
    pub const SHUFFLE: u64 = 0x05;
    pub const SPLIT: u64 = 0x06;
    pub const BOOTSTRAP: u64 = 0x07;
    pub const KFOLD: u64 = 0x08;
    pub const SUBSAMPLE: u64 = 0x09;
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic child seed from a master seed and two coordinates.
pub fn mix_seed(master: u64, a: u64, b: u64) -> u64 {
    let mut state = master ^ a.rotate_left(13) ^ b.rotate_left(29);
    splitmix64(&mut state)
}

/// ChaCha stream for (master seed, stream tag, element index).
pub fn derive_rng(master: u64, tag: u64, index: u64) -> ChaCha12Rng {
    let mut state = master ^ tag.rotate_left(17) ^ index.rotate_left(41);
    let mut seed = [0u8; 32];
    for chunk in seed.chunks_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    ChaCha12Rng::from_seed(seed)
}
