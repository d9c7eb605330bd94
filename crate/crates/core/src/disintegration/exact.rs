use std::collections::BTreeMap;

use super::ratio::FiberMeasure;
use super::{Disintegration, ExceptionReason};
use crate::measure::{marginal_x, JointMeasure};

/// Conditional distributions `nu_x(y_j) = zeta(x, y_j) / mu(x)` for every
/// `x` with `mu(x) > 0`; the exceptional set is `{x : mu(x) = 0}`.
pub fn exact_disintegration(zeta: &JointMeasure) -> Disintegration {
    let mu = marginal_x(zeta);
    let cy = zeta.carrier_y().clone();
    let mut exceptional = BTreeMap::new();
    let fibers = (0..zeta.carrier_x().len())
        .map(|i| {
            let m = mu.weight(i);
            if m > 0.0 {
                let atoms = zeta.row(i).iter().map(|e| (e.j, e.w / m)).collect();
                Some(FiberMeasure::new(cy.clone(), atoms))
            } else {
                exceptional.insert(i, ExceptionReason::NullMass);
                None
            }
        })
        .collect();
    Disintegration::new(mu, cy, fibers, exceptional)
}
