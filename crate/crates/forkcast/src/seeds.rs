//! Deterministic seed derivation.
//!
//! Every random stream in the crate is a ChaCha8 generator keyed by
//! (master seed, purpose string, index) through FNV-1a, so independent
//! streams never overlap and results are bit-reproducible across platforms.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// FNV-1a over (master, purpose, index).
pub fn derive_seed(master: u64, purpose: &str, index: u64) -> u64 {
    const OFFSET: u64 = 0xcbf29ce484222325;
    const PRIME: u64 = 0x100000001b3;
    let mut h = OFFSET;
    for byte in master.to_le_bytes().iter().chain(purpose.as_bytes()).chain(index.to_le_bytes().iter()) {
        h ^= *byte as u64;
        h = h.wrapping_mul(PRIME);
    }
    h
}

/// A fresh generator on the derived stream.
pub fn rng(master: u64, purpose: &str, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, purpose, index))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::RngCore;

    #[test]
    fn streams_are_stable_and_distinct() {
        let mut a = rng(7, "scene", 0);
        let mut b = rng(7, "scene", 0);
        assert_eq!(a.next_u64(), b.next_u64());

        let mut c = rng(7, "scene", 1);
        let mut d = rng(7, "trial", 0);
        let base = rng(7, "scene", 0).next_u64();
        assert_ne!(base, c.next_u64());
        assert_ne!(base, d.next_u64());
    }
}
