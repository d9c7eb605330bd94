//! Almost-sure conjugacy of competitive prices against a plan.
//!
//! The duality gap `int (psi + c - phi) dpi` is computed fiber by fiber
//! through the disintegration of `pi`. When the gap integrand vanishes on
//! the support, `psi` must agree with the c-transform of `phi` on every
//! `mu`-atom and `phi` with the transform of `psi` on every `nu`-atom.

use rayon::prelude::*;
use serde::Serialize;

use super::cost::CostMatrix;
use super::plan::TransferencePlan;
use super::prices::{c_transform_phi, c_transform_psi, PricePair};
use crate::disintegration::Disintegration;
use crate::error::{Error, Result};
use crate::sum::{compensated_sum, CompensatedSum};

pub const CONJUGACY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FiberGap {
    pub x: usize,
    pub mass: f64,
    pub gap: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Violation {
    pub i: usize,
    pub j: usize,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Defects {
    /// `mu`-mass of `{x : psi(x) != max_y (phi(y) - c(x, y))}`.
    pub psi_mass: f64,
    pub psi_atoms: Vec<usize>,
    /// `nu`-mass of `{y : phi(y) != min_x (psi(x) + c(x, y))}`.
    pub phi_mass: f64,
    pub phi_atoms: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConjugacyReport {
    pub tolerance: f64,
    pub primal_cost: f64,
    pub dual_value: f64,
    /// `sum_x mu(x) * fiber gap`.
    pub duality_gap: f64,
    /// `sum pi (psi + c - phi)` straight from the plan.
    pub direct_gap: f64,
    pub decomposition_residual: f64,
    pub min_fiber_gap: f64,
    pub fiber_gaps: Vec<FiberGap>,
    pub exceptional_mass: f64,
    pub almost_sure: bool,
    pub violations: Vec<Violation>,
    /// Present only when `almost_sure` holds.
    pub defects: Option<Defects>,
    pub passed: bool,
}

fn same(a: f64, b: f64, tol: f64) -> bool {
    a == b || (a - b).abs() <= tol
}

/// Checks `phi(y) - psi(x) = c(x, y)` `pi`-a.s. and the conjugacy it implies.
pub fn verify_conjugacy(
    pi: &TransferencePlan,
    prices: &PricePair,
    c: &CostMatrix,
    disintegration: &Disintegration,
    tol: f64,
) -> Result<ConjugacyReport> {
    prices.check_competitive(c, tol)?;
    let (psi, phi) = (&prices.psi, &prices.phi);
    let plan = pi.plan();

    let mut primal = CompensatedSum::new();
    let mut direct = CompensatedSum::new();
    let mut violations = Vec::new();
    for e in plan.entries() {
        let (a, b, cost) = (psi[e.i], phi[e.j], c.get(e.i, e.j));
        if !(a.is_finite() && b.is_finite() && cost.is_finite()) {
            return Err(Error::NotIntegrable);
        }
        let r = a + cost - b;
        primal.add(cost * e.w);
        direct.add(r * e.w);
        if r.abs() > tol {
            violations.push(Violation { i: e.i, j: e.j, residual: r });
        }
    }
    let dual_value = compensated_sum(pi.nu().weights().iter().zip(phi).filter(|(w, _)| **w > 0.0).map(|(w, p)| w * p))
        - compensated_sum(pi.mu().weights().iter().zip(psi).filter(|(w, _)| **w > 0.0).map(|(w, p)| w * p));

    let fibers: Vec<_> = disintegration.fibers().collect();
    let fiber_gaps: Vec<FiberGap> = fibers
        .par_iter()
        .map(|&(x, f)| {
            let mut acc = CompensatedSum::new();
            for &(j, w) in f.atoms() {
                let r = psi[x] + c.get(x, j) - phi[j];
                if !r.is_finite() {
                    return Err(Error::NotIntegrable);
                }
                acc.add(w * r);
            }
            Ok(FiberGap { x, mass: disintegration.mu().weight(x), gap: acc.value() })
        })
        .collect::<Result<_>>()?;
    let duality_gap = compensated_sum(fiber_gaps.iter().map(|g| g.mass * g.gap));
    let direct_gap = direct.value();
    let min_fiber_gap = fiber_gaps.iter().map(|g| g.gap).fold(f64::INFINITY, f64::min);

    let almost_sure = violations.is_empty();
    let defects = almost_sure.then(|| {
        let t_phi = c_transform_phi(phi, c);
        let t_psi = c_transform_psi(psi, c);
        let psi_atoms: Vec<usize> =
            (0..psi.len()).filter(|&i| pi.mu().weight(i) > 0.0 && !same(psi[i], t_phi[i], tol)).collect();
        let phi_atoms: Vec<usize> =
            (0..phi.len()).filter(|&j| pi.nu().weight(j) > 0.0 && !same(phi[j], t_psi[j], tol)).collect();
        Defects {
            psi_mass: compensated_sum(psi_atoms.iter().map(|&i| pi.mu().weight(i))),
            psi_atoms,
            phi_mass: compensated_sum(phi_atoms.iter().map(|&j| pi.nu().weight(j))),
            phi_atoms,
        }
    });
    let passed = duality_gap <= tol && defects.as_ref().is_some_and(|d| d.psi_mass <= tol && d.phi_mass <= tol);
    Ok(ConjugacyReport {
        tolerance: tol,
        primal_cost: primal.value(),
        dual_value,
        duality_gap,
        direct_gap,
        decomposition_residual: (duality_gap - direct_gap).abs(),
        min_fiber_gap,
        fiber_gaps,
        exceptional_mass: disintegration.exceptional_mass(),
        almost_sure,
        violations,
        defects,
        passed,
    })
}
