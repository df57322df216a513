//! Seeded random streams.
//!
//! Every stream is a SplitMix64 generator. Restart `i` of a run seeded with
//! `s` uses the stream seeded with `restart_seed(s, i)`.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;
use rand_xoshiro::SplitMix64;

pub type StreamRng = SplitMix64;

pub fn seeded(seed: u64) -> StreamRng {
    SplitMix64::seed_from_u64(seed)
}

/// Seed for restart `index` of a run: the `index`-th output of a SplitMix64
/// stream started at `seed`.
pub fn restart_seed(seed: u64, index: u64) -> u64 {
    let mut rng = seeded(seed);
    let mut out = 0;
    for _ in 0..=index {
        out = rng.random::<u64>();
    }
    out
}

pub fn gaussian_vector(rng: &mut impl Rng, n: usize) -> DVector<f64> {
    DVector::from_iterator(n, (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)))
}

/// Uniform point on the unit sphere in `n` dimensions (normalized Gaussian).
pub fn uniform_on_sphere(rng: &mut impl Rng, n: usize) -> DVector<f64> {
    loop {
        let g = gaussian_vector(rng, n);
        let norm = g.norm();
        if norm > 1e-12 {
            return g / norm;
        }
    }
}
