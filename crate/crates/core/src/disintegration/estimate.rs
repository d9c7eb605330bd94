//! Fibers assembled from ball ratios.
//!
//! On a finite carrier the singletons `{y_j}` (isolating balls) generate the
//! algebra, so `nu_x` is read off the singleton ratios at the finest defined
//! scale and extended by additivity. An atom `x` is exceptional when some
//! singleton ratio still moves across the tail window, when a probe annulus
//! fails to vanish, or (exact regime) when the finest ball does not isolate
//! `x`.

use std::collections::BTreeMap;

use log::warn;
use num_rational::Ratio;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::diagnostics::{default_gammas, ANNULUS_TOL};
use super::ratio::{FiberFunctional, FiberMeasure, RatioConfig, RatioProbe, Regime};
use super::schedule::ScaleSchedule;
use super::{Disintegration, ExceptionReason};
use crate::error::{Error, Result};
use crate::lattice::LatticeSet;
use crate::measure::{DiscreteMeasure, JointMeasure, PointCloud};
use crate::metric::Radius;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateConfig {
    pub regime: Regime,
    pub ratio: RatioConfig,
    /// Largest admissible `l_upper - l_lower` for a singleton.
    pub tolerance: f64,
    pub annulus_probes: Vec<(usize, Radius)>,
    #[serde(skip, default = "default_gammas")]
    pub gammas: Vec<Ratio<i128>>,
    pub annulus_tol: f64,
}

impl EstimateConfig {
    pub fn for_regime(regime: Regime, carrier_y: &PointCloud) -> Self {
        Self {
            regime,
            ratio: RatioConfig::for_regime(regime),
            tolerance: regime.tolerance(),
            annulus_probes: default_annulus_probes(carrier_y),
            gammas: default_gammas(),
            annulus_tol: ANNULUS_TOL,
        }
    }

    pub fn for_joint(zeta: &JointMeasure) -> Self {
        Self::for_regime(Regime::of(zeta), zeta.carrier_y())
    }
}

/// Up to four evenly spaced centers, radii `D/2` and `D/4` with `D` the
/// diameter rounded up to a power of two.
pub fn default_annulus_probes(cy: &PointCloud) -> Vec<(usize, Radius)> {
    let n = cy.len();
    if n == 0 {
        return Vec::new();
    }
    let diam = cy.diameter();
    let mut top = Radius::dyadic(1, 0).expect("positive");
    while top.to_f64() < diam {
        top = top.scaled(Ratio::from_integer(2)).expect("positive");
    }
    let centers: Vec<usize> = if n <= 4 { (0..n).collect() } else { (0..4).map(|k| k * (n - 1) / 3).collect() };
    centers
        .into_iter()
        .flat_map(|c| {
            [Ratio::new(1, 2), Ratio::new(1, 4)].into_iter().map(move |f| (c, top.scaled(f).expect("positive")))
        })
        .collect()
}

enum Outcome {
    Fiber(FiberMeasure),
    Exceptional(ExceptionReason),
}

fn estimate_atom(
    zeta: &JointMeasure,
    mu: &DiscreteMeasure,
    i: usize,
    schedule: &ScaleSchedule,
    config: &EstimateConfig,
) -> Result<Outcome> {
    if mu.weight(i) <= 0.0 {
        return Ok(Outcome::Exceptional(ExceptionReason::NullMass));
    }
    let probe = match RatioProbe::at_atom(zeta, mu, i, schedule, config.ratio) {
        Ok(p) => p,
        Err(Error::OutsideSupport) => return Ok(Outcome::Exceptional(ExceptionReason::NoDefinedScale)),
        Err(e) => return Err(e),
    };
    if config.regime == Regime::Exact && probe.ball_atoms(probe.finest_scale()) > 1 {
        return Ok(Outcome::Exceptional(ExceptionReason::Unresolved));
    }
    let mut atoms = Vec::new();
    for (j, ratios) in probe.singleton_ratios() {
        let hi = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
        // A singleton missing from the finer balls has ratio 0 there; the
        // window of masses already records that as an explicit 0.
        if hi - lo > config.tolerance {
            return Ok(Outcome::Exceptional(ExceptionReason::Unstable { y: j, spread: hi - lo }));
        }
        atoms.push((j, *ratios.last().expect("nonempty tail")));
    }
    if let Some(&gamma) = config.gammas.last() {
        for &(center, radius) in &config.annulus_probes {
            let annulus = LatticeSet::ball_minus_closed_ball(center, radius, gamma)?;
            if probe.l_x(&annulus) > config.annulus_tol {
                return Ok(Outcome::Exceptional(ExceptionReason::Annulus { center, radius }));
            }
        }
    }
    Ok(Outcome::Fiber(FiberMeasure::new(zeta.carrier_y().clone(), atoms)))
}

/// Disintegration built from ball ratios; per-x work runs in parallel and is
/// merged in index order.
pub fn estimated_disintegration(
    zeta: &JointMeasure,
    mu: &DiscreteMeasure,
    schedule: &ScaleSchedule,
    config: &EstimateConfig,
) -> Result<Disintegration> {
    for &(c, _) in &config.annulus_probes {
        zeta.carrier_y().check_index(c)?;
    }
    let outcomes: Vec<Outcome> = (0..zeta.carrier_x().len())
        .into_par_iter()
        .map(|i| estimate_atom(zeta, mu, i, schedule, config))
        .collect::<Result<_>>()?;
    let mut exceptional = BTreeMap::new();
    let mut fibers = Vec::with_capacity(outcomes.len());
    for (i, o) in outcomes.into_iter().enumerate() {
        match o {
            Outcome::Fiber(f) => fibers.push(Some(f)),
            Outcome::Exceptional(reason) => {
                exceptional.insert(i, reason);
                fibers.push(None);
            }
        }
    }
    let unresolved = exceptional.values().filter(|r| **r == ExceptionReason::Unresolved).count();
    if unresolved > 0 {
        warn!("schedule too coarse: {unresolved} atoms are not isolated at the finest scale");
    }
    Ok(Disintegration::new(mu.clone(), zeta.carrier_y().clone(), fibers, exceptional))
}
