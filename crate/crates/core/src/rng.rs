//! Seeding and random-stream construction.
//!
//! Every random object in the crate is drawn from a [`ChaCha8Rng`] built by
//! [`stream`]. ChaCha is a counter-based generator with a fixed, portable
//! output sequence, so a `u64` seed identifies a stream bit-for-bit on any
//! platform.
//!
//! Per-trial seeds are derived with [`derive_seed`], which folds a list of
//! integer coordinates into a base seed using the SplitMix64 finaliser:
//!
//! ```text
//! h <- splitmix64(base)
//! for c in coords: h <- splitmix64(h ^ c)
//! ```
//!
//! Gaussian variates come from `rand_distr::StandardNormal` (ziggurat), whose
//! output is a deterministic function of the underlying stream for the pinned
//! crate version in `Cargo.lock`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// SplitMix64 output function (Steele, Lea & Flood).
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Fold integer coordinates into `base` to get an independent stream seed.
pub fn derive_seed(base: u64, coords: &[u64]) -> u64 {
    coords
        .iter()
        .fold(splitmix64(base), |h, &c| splitmix64(h ^ c))
}

pub fn stream(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian<R: rand::Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}
