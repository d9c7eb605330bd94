//! Disintegration of a joint measure into fiber measures `nu_x` on `Y`.
//!
//! * [`ratio`]: ball-ratio densities `l_x` and the probe that evaluates them.
//! * [`outer`]: the outer measure `nu*_x` over lattice covers.
//! * [`diagnostics`]: Carathéodory split, annulus vanishing, compact-ball squeeze.
//! * [`exact`] / [`estimate`]: the conditional-distribution oracle and the
//!   ball-ratio construction.
//!
//! The Y-side decomposition is the X-side one applied to
//! [`JointMeasure::transpose`](crate::measure::JointMeasure::transpose).

pub mod diagnostics;
pub mod estimate;
pub mod exact;
pub mod outer;
pub mod ratio;
pub mod schedule;

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::measure::{slice_x, DiscreteMeasure, PointCloud, ProductSet};
use crate::metric::Radius;
use crate::sum::{compensated_sum, CompensatedSum};

pub use diagnostics::{
    annulus_vanishing, caratheodory_check, compact_ball_squeeze, AnnulusReport, CaratheodoryReport, Squeeze,
};
pub use estimate::{estimated_disintegration, EstimateConfig};
pub use exact::exact_disintegration;
pub use outer::{outer_measure, CoverTarget, OuterFlag, OuterMeasure, DEFAULT_COVER_BUDGET};
pub use ratio::{ball_ratio, mu_o, FiberFunctional, FiberMeasure, RatioConfig, RatioEstimate, RatioProbe, Regime};
pub use schedule::{ScaleSchedule, DEFAULT_SCALES};

/// Why an atom carries no fiber.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "reason")]
pub enum ExceptionReason {
    NullMass,
    NoDefinedScale,
    /// The finest defined ball holds other atoms (exact regime).
    Unresolved,
    Unstable {
        y: usize,
        spread: f64,
    },
    Annulus {
        center: usize,
        radius: Radius,
    },
}

/// Fibers `nu_x` for every non-exceptional atom of `X`.
#[derive(Debug, Clone)]
pub struct Disintegration {
    mu: DiscreteMeasure,
    carrier_y: Arc<PointCloud>,
    fibers: Vec<Option<FiberMeasure>>,
    exceptional: BTreeMap<usize, ExceptionReason>,
    exceptional_mass: f64,
}

impl Disintegration {
    pub fn new(
        mu: DiscreteMeasure,
        carrier_y: Arc<PointCloud>,
        fibers: Vec<Option<FiberMeasure>>,
        exceptional: BTreeMap<usize, ExceptionReason>,
    ) -> Self {
        let exceptional_mass = compensated_sum(exceptional.keys().map(|&i| mu.weight(i)));
        Self { mu, carrier_y, fibers, exceptional, exceptional_mass }
    }

    pub fn mu(&self) -> &DiscreteMeasure {
        &self.mu
    }

    pub fn carrier_y(&self) -> &Arc<PointCloud> {
        &self.carrier_y
    }

    pub fn fiber(&self, i: usize) -> Option<&FiberMeasure> {
        self.fibers.get(i).and_then(Option::as_ref)
    }

    /// `(i, nu_{x_i})` in index order, skipping exceptional atoms.
    pub fn fibers(&self) -> impl Iterator<Item = (usize, &FiberMeasure)> {
        self.fibers.iter().enumerate().filter_map(|(i, f)| f.as_ref().map(|f| (i, f)))
    }

    pub fn exceptional(&self) -> &BTreeMap<usize, ExceptionReason> {
        &self.exceptional
    }

    pub fn exceptional_mass(&self) -> f64 {
        self.exceptional_mass
    }

    /// `sum_x mu(x) nu_x(C_x)` over non-exceptional atoms.
    pub fn reconstruct(&self, set: &ProductSet) -> f64 {
        compensated_sum(self.fibers().map(|(i, f)| {
            let slice = slice_x(set, i).expect("product set matches carrier");
            self.mu.weight(i) * f.mass_of(&slice)
        }))
    }

    /// `sum_x mu(x) nu_x({y_j})` for every `j`.
    pub fn reconstructed_marginal_y(&self) -> Vec<f64> {
        let mut acc = vec![CompensatedSum::new(); self.carrier_y.len()];
        for (i, f) in self.fibers() {
            let m = self.mu.weight(i);
            for &(j, w) in f.atoms() {
                acc[j].add(m * w);
            }
        }
        acc.iter().map(CompensatedSum::value).collect()
    }
}
