//! Deterministic RNG stream derivation.
//!
//! Every random draw in an experiment comes from a ChaCha8 stream whose seed
//! is a pure function of `(master seed, purpose tag, numeric id)`. Parallel
//! and serial execution therefore consume identical streams, and sharing a
//! `(tag, id)` pair across algorithms yields common random numbers.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash = 0xCBF2_9CE4_8422_2325u64;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01B3);
    }
    hash
}

/// Derives a 64-bit stream seed from the master seed, a purpose tag, and an id.
pub fn derive_seed(master_seed: u64, tag: &str, id: u64) -> u64 {
    let mut state = master_seed ^ fnv1a(tag.as_bytes());
    let _ = splitmix64(&mut state);
    state = state.wrapping_add(id.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    splitmix64(&mut state)
}

/// ChaCha8 stream for `(master seed, tag, id)`.
pub fn derive_rng(master_seed: u64, tag: &str, id: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master_seed, tag, id))
}
