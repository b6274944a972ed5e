//! Seed derivation and uniform sampling helpers.
//!
//! Monte Carlo pieces (capital sampling, contraction probes, random family
//! generation) each seed one ChaCha stream per trial, derived from a master
//! seed and the trial index. Deriving instead of sequentially splitting keeps
//! trials order-independent, so parallel runs are bit-reproducible.

use rand_chacha::rand_core::RngCore;

/// Expand (seed, index) into ChaCha key material with splitmix64 steps.
pub fn derive_seed(seed: u64, index: u64) -> [u8; 32] {
    let mut state = seed ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    let mut out = [0u8; 32];
    for chunk in out.chunks_mut(8) {
        state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^= z >> 31;
        chunk.copy_from_slice(&z.to_le_bytes());
    }
    out
}

/// Uniform in [0, 1) with 53 random bits.
pub fn uniform_f64(rng: &mut impl RngCore) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / 9007199254740992.0)
}

/// Uniform in 0..n without modulo bias.
pub fn uniform_usize(rng: &mut impl RngCore, n: usize) -> usize {
    assert!(n > 0);
    let bound = n as u64;
    let zone = u64::MAX - u64::MAX % bound;
    loop {
        let x = rng.next_u64();
        if x < zone {
            return (x % bound) as usize;
        }
    }
}

/// Uniform in lo..=hi.
pub fn uniform_range_i64(rng: &mut impl RngCore, lo: i64, hi: i64) -> i64 {
    assert!(lo <= hi);
    lo + uniform_usize(rng, (hi - lo + 1) as usize) as i64
}
