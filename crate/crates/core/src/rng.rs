//! Deterministic seed derivation and keyed random draws.
//!
//! All randomness flows from a single 64-bit base seed through explicit
//! mixing, so that adding or removing one entity class (e.g. femtocells)
//! never shifts the draws consumed by another. Sequential sampling uses
//! `ChaCha8Rng` streams keyed by purpose; shadowing uses stateless keyed
//! draws so each (mobile, site) pair owns its value independent of
//! iteration order.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// splitmix64 finalizer; the standard 64-bit avalanche mix.
#[inline]
pub fn mix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Combines a seed with a stream of words into one derived seed.
pub fn derive_seed(base: u64, words: &[u64]) -> u64 {
    let mut acc = mix64(base ^ 0x6a09_e667_f3bc_c908);
    for &w in words {
        acc = mix64(acc ^ w);
    }
    acc
}

/// Derived seed for a named sub-stream ("operator", "ue", ...).
pub fn stream_seed(base: u64, tag: &str) -> u64 {
    let mut acc = mix64(base ^ 0xbb67_ae85_84ca_a73b);
    for b in tag.as_bytes() {
        acc = mix64(acc ^ u64::from(*b));
    }
    acc
}

/// Seeded ChaCha stream for sequential sampling under a named purpose.
pub fn stream(base: u64, tag: &str) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(stream_seed(base, tag))
}

/// Uniform in (0, 1] from a key; never returns 0 so `ln` stays finite.
#[inline]
fn keyed_unit(key: u64) -> f64 {
    // 53 random bits, then shift into (0, 1].
    let bits = mix64(key) >> 11;
    (bits as f64 + 1.0) / 9_007_199_254_740_992.0
}

/// Standard normal draw addressed by (seed, tag, a, b) via Box-Muller.
pub fn keyed_normal(seed: u64, tag: u64, a: u64, b: u64) -> f64 {
    let k = derive_seed(seed, &[tag, a, b]);
    let u1 = keyed_unit(k ^ 0x510e_527f_ade6_82d1);
    let u2 = keyed_unit(k ^ 0x9b05_688c_2b3e_6c1f);
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn derive_seed_is_deterministic_and_sensitive() {
        assert_eq!(derive_seed(1, &[2, 3]), derive_seed(1, &[2, 3]));
        assert_ne!(derive_seed(1, &[2, 3]), derive_seed(1, &[3, 2]));
        assert_ne!(derive_seed(1, &[2, 3]), derive_seed(2, &[2, 3]));
    }

    #[test]
    fn stream_tags_do_not_collide() {
        let tags = ["operator", "femto", "ue", "backhaul", "shadow"];
        let seeds: HashSet<u64> = tags.iter().map(|t| stream_seed(7, t)).collect();
        assert_eq!(seeds.len(), tags.len());
    }

    #[test]
    fn keyed_normal_moments() {
        let n = 200_000usize;
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for i in 0..n {
            let x = keyed_normal(42, 1, i as u64, 0);
            sum += x;
            sumsq += x * x;
        }
        let mean = sum / n as f64;
        let var = sumsq / n as f64 - mean * mean;
        assert!(mean.abs() < 0.01, "mean {mean}");
        assert!((var - 1.0).abs() < 0.02, "var {var}");
    }

    #[test]
    fn keyed_normal_is_a_pure_function() {
        assert_eq!(keyed_normal(9, 2, 11, 3), keyed_normal(9, 2, 11, 3));
        assert_ne!(keyed_normal(9, 2, 11, 3), keyed_normal(9, 2, 11, 4));
    }
}
