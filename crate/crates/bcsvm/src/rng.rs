//! Deterministic randomness for shuffling and partitioning.
//!
//! Every seeded operation in the crate draws from ChaCha8 (the reference
//! stream cipher as implemented by `rand_chacha`), so a seed reproduces the
//! same permutations on every platform and thread count. Layer seeds for the
//! cascade come from the generator's independent streams: layer `l` of run
//! seed `s` is seeded with the first output of ChaCha8(seed = s, stream = l).

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub(crate) struct DetRng {
    inner: ChaCha8Rng,
}

impl DetRng {
    pub fn new(seed: u64) -> Self {
        DetRng { inner: ChaCha8Rng::seed_from_u64(seed) }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform draw from `0..n`, unbiased via rejection sampling.
    pub fn below(&mut self, n: usize) -> usize {
        assert!(n > 0, "empty range");
        let bound = n as u64;
        let zone = (u64::MAX / bound) * bound;
        loop {
            let v = self.next_u64();
            if v < zone {
                return (v % bound) as usize;
            }
        }
    }

    /// Uniform f64 in [0, 1) with 53 random bits.
    pub fn unit_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal via Box–Muller; always consumes exactly two uniforms.
    pub fn gaussian(&mut self) -> f64 {
        let (u1, u2) = (self.unit_f64().max(1e-12), self.unit_f64());
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    /// In-place Fisher–Yates shuffle.
    pub fn shuffle<T>(&mut self, xs: &mut [T]) {
        for i in (1..xs.len()).rev() {
            let j = self.below(i + 1);
            xs.swap(i, j);
        }
    }
}

/// Seed for cascade layer `layer` derived from the run seed by stream
/// splitting, so adding layers never perturbs earlier layers' draws.
pub(crate) fn layer_seed(seed: u64, layer: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(layer);
    rng.next_u64()
}

/// The permutation `shuffle` applies for a given seed: a shuffled `0..n`.
pub(crate) fn shuffled_indices(n: usize, seed: u64) -> Vec<usize> {
    let mut ids: Vec<usize> = (0..n).collect();
    DetRng::new(seed).shuffle(&mut ids);
    ids
}
