//! Seeded random streams.
//!
//! Every stochastic component draws from a [`Stream`], a ChaCha8 generator
//! whose 64-bit seed is derived from a base seed and a path of integer labels:
//!
//! ```text
//! h0 = splitmix64(base)
//! h(i+1) = splitmix64(h(i) ^ splitmix64(label(i) + 0x9E3779B97F4A7C15 * (i + 1)))
//! seed = h(len)
//! ```
//!
//! `splitmix64` is the standard finalizer of Steele, Lea and Flood. String
//! labels (algorithm names) are reduced to integers with 64-bit FNV-1a.
//! Because a stream depends only on its path, runs can execute in any order
//! or on any number of threads and still see identical randomness.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Stream = ChaCha8Rng;

/// SplitMix64 output function.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// 64-bit FNV-1a hash, used to turn names into stream labels.
pub fn label(name: &str) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    for &b in name.as_bytes() {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

/// Mixes a base seed with a path of labels into a single seed.
pub fn derive_seed(base: u64, path: &[u64]) -> u64 {
    let mut h = splitmix64(base);
    for (i, &l) in path.iter().enumerate() {
        let salt = 0x9E37_79B9_7F4A_7C15u64.wrapping_mul(i as u64 + 1);
        h = splitmix64(h ^ splitmix64(l.wrapping_add(salt)));
    }
    h
}

/// Stream for `(base, path)`.
pub fn stream(base: u64, path: &[u64]) -> Stream {
    Stream::seed_from_u64(derive_seed(base, path))
}
