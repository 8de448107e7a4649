//! Deterministic substream derivation.
//!
//! All randomness in the crate flows through ChaCha8 streams whose 256-bit
//! seeds are derived by splitmix64 mixing of a master seed and a few salt
//! words. Streams keyed on the same words always produce the same draws, on
//! any platform and under any thread schedule. This is what makes lazy
//! exploration agree with eager sequence generation and lets coupling from
//! the past reuse past randomness structurally.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[inline]
fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mix a master seed and salt words into a single 64-bit value.
pub fn mix(seed: u64, salts: &[u64]) -> u64 {
    let mut state = seed ^ 0x6a09_e667_f3bc_c908;
    let mut acc = splitmix64(&mut state);
    for &s in salts {
        state ^= s.wrapping_mul(0xff51_afd7_ed55_8ccd);
        acc ^= splitmix64(&mut state).rotate_left(23);
    }
    acc
}

/// ChaCha8 stream keyed on `(seed, salts...)`.
pub fn stream(seed: u64, salts: &[u64]) -> ChaCha8Rng {
    let mut state = mix(seed, salts);
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}

/// Seed for an independent replica substream.
pub fn replica_seed(master: u64, replica: u64) -> u64 {
    mix(master, &[0x5245_504c, replica])
}
