#![allow(dead_code)]

use disint_core::fixtures::FixtureRng;
use disint_core::{Generator, LatticeSet, PointCloud, Radius};
use rand::Rng;

/// Radius `k / 4` with `k` in `1..=4 * (diam + 1)`; quarter steps hit integer
/// distances exactly, so boundary cases come up often.
pub fn random_radius(rng: &mut FixtureRng, cloud: &PointCloud) -> Radius {
    let top = (4.0 * (cloud.diameter() + 1.0)).ceil() as i128;
    Radius::new(rng.gen_range(1..=top), 4).unwrap()
}

pub fn random_generator(rng: &mut FixtureRng, cloud: &PointCloud) -> Generator {
    let center = rng.gen_range(0..cloud.len());
    let radius = random_radius(rng, cloud);
    if rng.gen_bool(0.6) {
        Generator::open_ball(center, radius)
    } else {
        Generator::closed_ball_complement(center, radius)
    }
}

/// Union of up to three intersections of up to two generators.
pub fn random_lattice_set(rng: &mut FixtureRng, cloud: &PointCloud) -> LatticeSet {
    let clauses = (0..rng.gen_range(0..=3))
        .map(|_| (0..rng.gen_range(1..=2)).map(|_| random_generator(rng, cloud)).collect())
        .collect();
    LatticeSet { clauses }
}
