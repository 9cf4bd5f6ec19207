#![allow(dead_code)]

use std::sync::Arc;

use fp_planner::{Aabb, Configuration, GroundTruth, ObstaclePrimitive};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn unit_square() -> Aabb {
    Aabb::new(vec![0.0; 2], vec![1.0; 2]).unwrap()
}

pub fn bx(x0: f64, y0: f64, x1: f64, y1: f64, known: bool) -> ObstaclePrimitive {
    ObstaclePrimitive::boxed(vec![x0, y0], vec![x1, y1], known).unwrap()
}

pub fn c(v: &[f64]) -> Configuration {
    Configuration::new(v.to_vec())
}

/// Random unknown boxes and disks in the unit square, with start and target
/// points kept clear of every obstacle.
pub struct World {
    pub truth: Arc<GroundTruth>,
    pub start: Configuration,
    pub target: Configuration,
}

pub fn random_world(seed: u64, obstacles: usize) -> World {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start = [rng.gen_range(0.05..0.3), rng.gen_range(0.05..0.95)];
    let target = [rng.gen_range(0.7..0.95), rng.gen_range(0.05..0.95)];
    let clear =
        |p: &ObstaclePrimitive| p.distance_to(&start) > 0.02 && p.distance_to(&target) > 0.02;
    let mut prims = Vec::new();
    while prims.len() < obstacles {
        let cx = rng.gen_range(0.1..0.9);
        let cy = rng.gen_range(0.0..1.0);
        let p = if rng.gen_bool(0.7) {
            let (hx, hy) = (rng.gen_range(0.01..0.08), rng.gen_range(0.02..0.25));
            bx(cx - hx, cy - hy, cx + hx, cy + hy, rng.gen_bool(0.2))
        } else {
            ObstaclePrimitive::ball(vec![cx, cy], rng.gen_range(0.02..0.08), false)
        };
        if clear(&p) {
            prims.push(p);
        }
    }
    World {
        truth: Arc::new(GroundTruth::new(unit_square(), prims).unwrap()),
        start: c(&start),
        target: c(&target),
    }
}
