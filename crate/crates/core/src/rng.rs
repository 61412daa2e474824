//! Seeded random streams.
//!
//! All randomness flows through ChaCha8 seeded with `seed_from_u64`, and normal
//! deviates come from the ziggurat sampler in `rand_distr`. Both are specified
//! bit-for-bit by their crates, so a seed reproduces the same stream on every
//! platform.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::hilbert::{Grid, HilbertVector};

pub type SeededRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn standard_normals(rng: &mut SeededRng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

/// Gaussian direction normalized to unit length in the grid's norm.
pub fn unit_direction(rng: &mut SeededRng, grid: &Grid) -> HilbertVector {
    loop {
        let v = grid
            .vector(standard_normals(rng, grid.len()))
            .expect("length matches grid");
        let n = v.norm();
        if n > 0.0 {
            return v.scale(1.0 / n);
        }
    }
}

/// Point drawn uniformly from the ball of radius `radius` about `center`.
pub fn point_in_ball(rng: &mut SeededRng, center: &HilbertVector, radius: f64) -> HilbertVector {
    let dir = unit_direction(rng, center.grid());
    let u: f64 = rng.random();
    let r = radius * u.powf(1.0 / center.len() as f64);
    let mut p = center.clone();
    p.axpy(r, &dir);
    p
}
