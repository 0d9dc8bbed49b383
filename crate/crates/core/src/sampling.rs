//! Seeded uniform sampling in Euclidean balls.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::vector::Point;

pub type SeededRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A uniform sample from the open ball `B(center, radius)`.
pub fn uniform_in_ball<R: Rng>(rng: &mut R, center: &Point, radius: f64) -> Point {
    let dim = center.dim();
    let offset = uniform_offset(rng, dim, radius);
    center.add(&offset)
}

/// A uniform sample from `B(0, radius)` in ℝ^dim.
pub fn uniform_offset<R: Rng>(rng: &mut R, dim: usize, radius: f64) -> Point {
    loop {
        let dir: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let norm = dir.iter().map(|c| c * c).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let u: f64 = rng.random();
        let r = radius * u.powf(1.0 / dim as f64);
        return Point::from_raw(dir.into_iter().map(|c| c / norm * r).collect());
    }
}

/// Like [`uniform_in_ball`] but rejects samples closer than `inner` to the
/// center.
pub fn uniform_in_shell<R: Rng>(rng: &mut R, center: &Point, radius: f64, inner: f64) -> Point {
    loop {
        let offset = uniform_offset(rng, center.dim(), radius);
        if offset.norm() > inner {
            return center.add(&offset);
        }
    }
}
