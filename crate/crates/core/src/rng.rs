//! Counter-keyed randomness.
//!
//! Two mechanisms, both stateless at the call site:
//! * site quantities of an environment are pure hashes of `(seed, z, component)`;
//! * path noise comes from ChaCha8 with a key derived from `(seed, tag, unit)`
//!   and the stream set to the path index.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// splitmix64 finaliser.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Order-sensitive hash of a word sequence.
#[inline]
pub fn hash_words(words: &[u64]) -> u64 {
    let mut h = 0x243F_6A88_85A3_08D3u64;
    for &w in words {
        h = mix64(h ^ mix64(w));
    }
    h
}

/// Uniform on `[0, 1)` from the top 53 bits.
#[inline]
pub fn unit_from_bits(bits: u64) -> f64 {
    (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Purpose tags separate the random streams of different estimators that
/// share one run seed.
pub mod tag {
    pub const SITE: u64 = 0x51;
    pub const DIFFUSION: u64 = 0x52;
    pub const OFFSET: u64 = 0x53;
    pub const ENV: u64 = 0x60;
    pub const PATH: u64 = 0x70;
    pub const PROBE: u64 = 0x80;
}

/// Seed of the `index`-th environment of a run.
pub fn env_seed(run_seed: u64, index: u64) -> u64 {
    hash_words(&[run_seed, tag::ENV, index])
}

/// Key for a family of path streams.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StreamKey(u64);

impl StreamKey {
    pub fn new(seed: u64, tag: u64, unit: u64) -> Self {
        StreamKey(hash_words(&[seed, tag, unit]))
    }

    /// Derived key, for nesting (e.g. one key per probe point).
    pub fn child(self, unit: u64) -> Self {
        StreamKey(hash_words(&[self.0, unit]))
    }

    /// Generator for path `index`; independent of every other index.
    pub fn rng(self, index: u64) -> ChaCha8Rng {
        let mut r = ChaCha8Rng::seed_from_u64(self.0);
        r.set_stream(index);
        r
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn streams_differ_and_repeat() {
        let k = StreamKey::new(7, tag::PATH, 0);
        let mut r0 = k.rng(0);
        let mut r0b = k.rng(0);
        let mut r1 = k.rng(1);
        let x0: u64 = r0.random();
        assert_eq!(x0, r0b.random::<u64>());
        assert_ne!(x0, r1.random::<u64>());
    }

    #[test]
    fn unit_range() {
        assert_eq!(unit_from_bits(0), 0.0);
        assert!(unit_from_bits(u64::MAX) < 1.0);
    }

    #[test]
    fn hash_is_order_sensitive() {
        assert_ne!(hash_words(&[1, 2]), hash_words(&[2, 1]));
    }
}
