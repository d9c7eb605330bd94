//! Shared inputs for the benchmarks.

use disint_core::fixtures::{self, OtProblem, RandomJoint};
use disint_core::JointMeasure;

/// A dense random joint measure on `n x n` line points.
pub fn dense_joint(seed: u64, n: usize) -> JointMeasure {
    let opts = RandomJoint { max_x: n, max_y: n, density: 0.5, full_rows: true, ..Default::default() };
    let mut rng = fixtures::rng(seed);
    // Redraw until both carriers reach the requested size.
    loop {
        let z = fixtures::random_joint(&mut rng, opts).expect("valid");
        if z.carrier_x().len() == n && z.carrier_y().len() == n {
            return z;
        }
    }
}

/// A feasible transport instance with exactly `n` sources and targets.
pub fn ot_instance(seed: u64, n: usize) -> OtProblem {
    let mut rng = fixtures::rng(seed);
    loop {
        let p = fixtures::random_ot(&mut rng, n, false);
        if p.mu.weights().len() == n && p.nu.weights().len() == n {
            return p;
        }
    }
}
