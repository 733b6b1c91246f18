//! Seed derivation and random draws.
//!
//! Every random stream is a ChaCha8 generator seeded from a 64-bit value.
//! Child seeds come from a counter-based split: `derive_seed(parent, tag)`
//! runs the SplitMix64 finalizer over `parent` and `tag`, so a trial's
//! streams depend only on (master seed, trial index, stream tag) and never on
//! scheduling order.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::constellation::Constellation;

pub type SimRng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives an independent child seed from `parent` and a stream tag.
pub fn derive_seed(parent: u64, tag: u64) -> u64 {
    splitmix64(splitmix64(parent) ^ splitmix64(tag.wrapping_add(0x632B_E59B_D9B4_E019)))
}

/// Stream tags used by the simulation pipeline.
pub mod stream {
    pub const CHANNEL: u64 = 1;
    pub const SENSING_SYMBOLS: u64 = 2;
    pub const SENSING_NOISE: u64 = 3;
    pub const DATA_BITS: u64 = 4;
    pub const DATA_NOISE: u64 = 5;
    pub const PROBES: u64 = 6;
}

pub fn rng_from_seed(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Circularly-symmetric complex Gaussian with `E|z|^2 = variance`.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re * s, im * s)
}

pub fn awgn<R: Rng + ?Sized>(rng: &mut R, len: usize, variance: f64) -> Vec<Complex64> {
    (0..len).map(|_| complex_gaussian(rng, variance)).collect()
}

pub fn random_bits<R: Rng + ?Sized>(rng: &mut R, len: usize) -> Vec<u8> {
    (0..len).map(|_| rng.random::<bool>() as u8).collect()
}

/// Uniformly random constellation points.
pub fn random_symbols<R: Rng + ?Sized>(
    rng: &mut R,
    cst: &Constellation,
    len: usize,
) -> Vec<Complex64> {
    let pts = cst.points();
    (0..len).map(|_| pts[rng.random_range(0..pts.len())]).collect()
}
