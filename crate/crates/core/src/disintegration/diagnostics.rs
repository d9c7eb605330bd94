//! Checks on the exceptional-set machinery: the Carathéodory split of a
//! cover by an open ball, vanishing of thin annuli, and the two-sided bound
//! on closed-ball intersections.

use std::collections::BTreeSet;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use super::outer::{outer_measure, CoverTarget};
use super::ratio::FiberFunctional;
use crate::error::{Error, Result};
use crate::lattice::{Generator, GeneratorKind, LatticeSet};
use crate::metric::Radius;
use crate::sum::compensated_sum;

/// An annulus value above this at the last `gamma` marks `x` exceptional.
pub const ANNULUS_TOL: f64 = 1e-3;
/// Slack below `-CARATHEODORY_TOL` counts as a violation (float roundoff).
pub const CARATHEODORY_TOL: f64 = 1e-12;

/// `gamma_j = 1 - 2^-j`, `j = 1..=20`.
pub fn default_gammas() -> Vec<Ratio<i128>> {
    (1..=20).map(|j| Ratio::new((1i128 << j) - 1, 1i128 << j)).collect()
}

/// `eta_k = 1 + 2^-k`, `k = 1..=12`.
pub fn default_etas() -> Vec<Ratio<i128>> {
    (1..=12).map(|k| Ratio::new((1i128 << k) + 1, 1i128 << k)).collect()
}

fn check_unit_interval(alphas: &[Ratio<i128>]) -> Result<()> {
    let zero = Ratio::from_integer(0);
    let one = Ratio::from_integer(1);
    match alphas.iter().find(|a| **a <= zero || **a >= one) {
        Some(a) => Err(Error::InvalidAlpha(a.to_string())),
        None => Ok(()),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverCheck {
    /// `sum_i l_x(O_i)`
    pub cover_value: f64,
    pub inside: f64,
    pub outside: f64,
    /// `sum_i l_x(B_r(y) \ closed B_{alpha_i r}(y))`
    pub annulus_sum: f64,
    pub slack: f64,
    /// Smallest per-element slack of the four-term additivity bound.
    pub element_slack: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaratheodoryReport {
    pub checks: Vec<CoverCheck>,
    /// Supplied covers that did not cover `C` and were skipped.
    pub skipped: usize,
    pub worst_slack: f64,
    pub violations: usize,
}

/// For each cover `{O_i}` of `C`, checks
/// `nu*(C cap B) + nu*(C \ B) <= sum_i l_x(O_i)` using the split covers
/// `{O_i cap B}` and `{O_i \ closed B_{alpha_i r}}`.
///
/// `alphas[i]` is used for the `i`-th cover element (the last one repeats).
pub fn caratheodory_check<F: FiberFunctional + ?Sized>(
    lx: &F,
    c: &BTreeSet<usize>,
    ball: &Generator,
    covers: &[Vec<LatticeSet>],
    alphas: &[Ratio<i128>],
    cover_budget: usize,
) -> Result<CaratheodoryReport> {
    if ball.kind != GeneratorKind::OpenBall {
        return Err(Error::NotOpenBall);
    }
    if alphas.is_empty() {
        return Err(Error::InvalidAlpha("empty sequence".into()));
    }
    check_unit_interval(alphas)?;
    let cloud = lx.carrier();
    cloud.check_index(ball.center)?;
    let b = LatticeSet::from_generator(*ball);
    let in_ball = b.members(cloud);
    let inside_pts: BTreeSet<usize> = c.intersection(&in_ball).copied().collect();
    let outside_pts: BTreeSet<usize> = c.difference(&in_ball).copied().collect();
    let outer_in = outer_measure(lx, &CoverTarget::Points(inside_pts), cover_budget)?.value;
    let outer_out = outer_measure(lx, &CoverTarget::Points(outside_pts), cover_budget)?.value;

    let mut checks = Vec::new();
    let mut skipped = 0;
    for cover in covers {
        let union: BTreeSet<usize> = cover.iter().flat_map(|o| o.members(cloud)).collect();
        if !c.is_subset(&union) {
            skipped += 1;
            continue;
        }
        let mut values = Vec::with_capacity(cover.len());
        let mut split_in = Vec::with_capacity(cover.len());
        let mut split_out = Vec::with_capacity(cover.len());
        let mut annuli = Vec::with_capacity(cover.len());
        let mut element_slack = f64::INFINITY;
        for (i, o) in cover.iter().enumerate() {
            let alpha = alphas[i.min(alphas.len() - 1)];
            let inner = ball.radius.scaled(alpha)?;
            let v = lx.l_x(o);
            let vin = lx.l_x(&o.intersect(&b)?);
            let vout = lx.l_x(&o.minus_closed_ball(ball.center, inner)?);
            let va = lx.l_x(&LatticeSet::ball_minus_closed_ball(ball.center, ball.radius, alpha)?);
            element_slack = element_slack.min((v + va) - (vin + vout));
            values.push(v);
            split_in.push(vin);
            split_out.push(vout);
            annuli.push(va);
        }
        let cover_value = compensated_sum(values);
        let inside = outer_in.min(compensated_sum(split_in));
        let outside = outer_out.min(compensated_sum(split_out));
        checks.push(CoverCheck {
            cover_value,
            inside,
            outside,
            annulus_sum: compensated_sum(annuli),
            slack: cover_value - (inside + outside),
            element_slack,
        });
    }
    let worst_slack = checks.iter().map(|k| k.slack).fold(f64::INFINITY, f64::min);
    let violations = checks.iter().filter(|k| k.slack < -CARATHEODORY_TOL).count();
    Ok(CaratheodoryReport { checks, skipped, worst_slack, violations })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnulusReport {
    pub center: usize,
    pub radius: Radius,
    pub gammas: Vec<f64>,
    /// `l_x(B_r(y) \ closed B_{gamma_j r}(y))` per `gamma_j`.
    pub values: Vec<f64>,
    pub exceptional: bool,
}

/// `l_x` of the annuli `B_r(y) \ closed B_{gamma_j r}(y)` for increasing
/// `gamma_j -> 1`.
pub fn annulus_vanishing<F: FiberFunctional + ?Sized>(
    lx: &F,
    center: usize,
    radius: Radius,
    gammas: &[Ratio<i128>],
) -> Result<AnnulusReport> {
    check_unit_interval(gammas)?;
    if gammas.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidAlpha("gammas must be strictly increasing".into()));
    }
    lx.carrier().check_index(center)?;
    let mut values = Vec::with_capacity(gammas.len());
    for &g in gammas {
        values.push(lx.l_x(&LatticeSet::ball_minus_closed_ball(center, radius, g)?));
    }
    let exceptional = values.last().is_some_and(|&v| v > ANNULUS_TOL);
    Ok(AnnulusReport {
        center,
        radius,
        gammas: gammas.iter().map(|g| *g.numer() as f64 / *g.denom() as f64).collect(),
        values,
        exceptional,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Squeeze {
    /// `1 - l_x(Y \ closed B)`, clamped at 0.
    pub lower: f64,
    /// `min_k l_x(B_{eta_k})`
    pub upper: f64,
    pub exceptional: bool,
}

/// Two-sided bound on `nu_x` of `closed B = cap_i closed B_{r_i}(y_i)`.
pub fn compact_ball_squeeze<F: FiberFunctional + ?Sized>(
    lx: &F,
    balls: &[(usize, Radius)],
    etas: &[Ratio<i128>],
    tol: f64,
) -> Result<Squeeze> {
    let one = Ratio::from_integer(1);
    if etas.is_empty() {
        return Err(Error::InvalidRadius("no eta values".into()));
    }
    if let Some(e) = etas.iter().find(|e| **e <= one) {
        return Err(Error::InvalidRadius(format!("eta {e} must exceed 1")));
    }
    let cloud = lx.carrier();
    for &(c, _) in balls {
        cloud.check_index(c)?;
    }
    let complement =
        LatticeSet { clauses: balls.iter().map(|&(c, r)| vec![Generator::closed_ball_complement(c, r)]).collect() };
    let lower = (1.0 - lx.l_x(&complement)).max(0.0);
    let mut upper = f64::INFINITY;
    for &eta in etas {
        let grown = LatticeSet {
            clauses: vec![balls
                .iter()
                .map(|&(c, r)| r.scaled(eta).map(|r| Generator::open_ball(c, r)))
                .collect::<Result<Vec<_>>>()?],
        };
        upper = upper.min(lx.l_x(&grown));
    }
    Ok(Squeeze { lower, upper, exceptional: lower > upper + tol })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::disintegration::ratio::FiberMeasure;
    use crate::measure::PointCloud;
    use std::sync::Arc;

    fn line_fiber() -> FiberMeasure {
        let cy = Arc::new(PointCloud::line(&[0.0, 0.25, 0.5, 0.75, 1.0]).unwrap());
        FiberMeasure::new(cy, vec![(0, 0.1), (1, 0.2), (2, 0.3), (3, 0.25), (4, 0.15)])
    }

    fn r(p: i128, q: i128) -> Radius {
        Radius::new(p, q).unwrap()
    }

    #[test]
    fn carath_inside_and_outside() {
        let f = line_fiber();
        let ball = Generator::open_ball(2, r(3, 8));
        let covers = vec![vec![LatticeSet::whole(f.carrier())]];
        // C inside the ball: outside term vanishes.
        let c = BTreeSet::from([1, 2]);
        let rep = caratheodory_check(&f, &c, &ball, &covers, &default_gammas(), 1000).unwrap();
        assert_eq!(rep.checks[0].outside, 0.0);
        assert!(rep.worst_slack >= 0.0);
        // C away from the closed ball: inside term vanishes.
        let c = BTreeSet::from([0, 4]);
        let rep = caratheodory_check(&f, &c, &ball, &covers, &default_gammas(), 1000).unwrap();
        assert_eq!(rep.checks[0].inside, 0.0);
        assert_eq!(rep.violations, 0);
    }

    #[test]
    fn carath_skips_non_covers_and_rejects_bad_input() {
        let f = line_fiber();
        let ball = Generator::open_ball(2, r(3, 8));
        let c = BTreeSet::from([0, 4]);
        let covers = vec![vec![LatticeSet::ball(0, r(1, 8))]];
        let rep = caratheodory_check(&f, &c, &ball, &covers, &default_gammas(), 100).unwrap();
        assert_eq!(rep.skipped, 1);
        let co = Generator::closed_ball_complement(2, r(1, 4));
        assert!(matches!(caratheodory_check(&f, &c, &co, &covers, &default_gammas(), 100), Err(Error::NotOpenBall)));
        assert!(caratheodory_check(&f, &c, &ball, &covers, &[Ratio::from_integer(1)], 100).is_err());
    }

    #[test]
    fn annulus_away_from_mass_is_zero() {
        let f = line_fiber();
        let rep = annulus_vanishing(&f, 0, r(1, 8), &default_gammas()).unwrap();
        assert!(rep.values.iter().all(|&v| v == 0.0));
        assert!(!rep.exceptional);
        assert!(annulus_vanishing(&f, 0, r(1, 8), &[Ratio::new(1, 2), Ratio::new(1, 4)]).is_err());
    }

    #[test]
    fn squeeze_cases() {
        let f = line_fiber();
        let s = compact_ball_squeeze(&f, &[], &default_etas(), 1e-12).unwrap();
        assert_eq!((s.lower, s.upper), (1.0, 1.0));
        // disjoint closed balls: empty intersection
        let s = compact_ball_squeeze(&f, &[(0, r(1, 16)), (4, r(1, 16))], &default_etas(), 1e-12).unwrap();
        assert_eq!(s.lower, 0.0);
        assert_eq!(s.upper, 0.0);
        // closed ball of radius 1/4 around 0.5 holds atoms 1, 2, 3
        let s = compact_ball_squeeze(&f, &[(2, r(1, 4))], &default_etas(), 1e-12).unwrap();
        assert!((s.lower - 0.75).abs() < 1e-15);
        assert!((s.upper - 0.75).abs() < 1e-15);
        assert!(!s.exceptional);
        assert!(compact_ball_squeeze(&f, &[(2, r(1, 4))], &[Ratio::from_integer(1)], 1e-12).is_err());
    }
}
