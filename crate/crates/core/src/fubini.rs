//! Iterated integration against a disintegration, in both orders.
//!
//! `iterated_xy` integrates over fibers of `Y` first and then against `mu`;
//! `iterated_yx` does the same on the transposed measure. Signed integrands
//! go through [`integrability_report`] so that `f = f+ - f-` is split before
//! anything is added.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::Serialize;

use crate::disintegration::Disintegration;
use crate::error::{Error, Result};
use crate::measure::{eval_at, JointMeasure, PairFunction, PairPoint, ProductSet};
use crate::sum::{compensated_sum, CompensatedSum};

/// Agreement tolerance between the three integrals of a report.
pub const REPORT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Iterated {
    pub value: f64,
    /// `mu`-mass of atoms without a fiber; they contribute 0.
    pub exceptional_mass: f64,
}

#[derive(Clone, Copy)]
enum Side {
    X,
    Y,
}

#[derive(Clone, Copy)]
enum Part {
    Raw,
    Positive,
    Negative,
    Abs,
}

impl Part {
    fn apply(self, v: f64) -> f64 {
        match self {
            Part::Raw => v,
            Part::Positive => v.max(0.0),
            Part::Negative => (-v).max(0.0),
            Part::Abs => v.abs(),
        }
    }
}

fn eval_pair<F: PairFunction + ?Sized>(
    f: &F,
    d: &Disintegration,
    side: Side,
    outer: usize,
    inner: usize,
) -> Result<f64> {
    let oc = d.mu().carrier();
    let ic = d.carrier_y();
    let (i, j, x, y) = match side {
        Side::X => (outer, inner, oc.point(outer), ic.point(inner)),
        Side::Y => (inner, outer, ic.point(inner), oc.point(outer)),
    };
    let v = f.eval(PairPoint { i, j, x, y });
    if v.is_nan() {
        Err(Error::UndefinedIntegrand { i, j })
    } else {
        Ok(v)
    }
}

fn iterate<F: PairFunction + ?Sized>(f: &F, d: &Disintegration, side: Side, part: Part) -> Result<Iterated> {
    let fibers: Vec<_> = d.fibers().collect();
    let inner: Vec<f64> = fibers
        .par_iter()
        .map(|&(o, fiber)| {
            let mut acc = CompensatedSum::new();
            for &(k, w) in fiber.atoms() {
                let v = eval_pair(f, d, side, o, k)?;
                let v = match part {
                    Part::Raw if v < 0.0 => return Err(Error::NeedsIntegrabilityCheck),
                    p => p.apply(v),
                };
                acc.add(v * w);
            }
            Ok(acc.value())
        })
        .collect::<Result<_>>()?;
    let value = compensated_sum(fibers.iter().zip(&inner).map(|(&(o, _), &v)| d.mu().weight(o) * v));
    Ok(Iterated { value, exceptional_mass: d.exceptional_mass() })
}

/// `int_X (int_Y f(x, y) nu_x(dy)) mu(dx)` for `f >= 0` on the fibers.
pub fn iterated_xy<F: PairFunction + ?Sized>(f: &F, disintegration: &Disintegration) -> Result<Iterated> {
    iterate(f, disintegration, Side::X, Part::Raw)
}

/// `int_Y (int_X f(x, y) mu_y(dx)) nu(dy)`; `disintegration_y` is the
/// disintegration of the transposed measure.
pub fn iterated_yx<F: PairFunction + ?Sized>(f: &F, disintegration_y: &Disintegration) -> Result<Iterated> {
    iterate(f, disintegration_y, Side::Y, Part::Raw)
}

fn signed(
    f: &(impl PairFunction + ?Sized),
    d: &Disintegration,
    side: Side,
    report: &IntegrabilityReport,
) -> Result<Iterated> {
    if !report.integrable {
        return Err(Error::NotIntegrable);
    }
    let pos = iterate(f, d, side, Part::Positive)?;
    let neg = iterate(f, d, side, Part::Negative)?;
    Ok(Iterated { value: pos.value - neg.value, exceptional_mass: pos.exceptional_mass })
}

/// Signed version of [`iterated_xy`], allowed once `report` says `f` is integrable.
pub fn iterated_xy_checked<F: PairFunction + ?Sized>(
    f: &F,
    disintegration: &Disintegration,
    report: &IntegrabilityReport,
) -> Result<Iterated> {
    signed(f, disintegration, Side::X, report)
}

pub fn iterated_yx_checked<F: PairFunction + ?Sized>(
    f: &F,
    disintegration_y: &Disintegration,
    report: &IntegrabilityReport,
) -> Result<Iterated> {
    signed(f, disintegration_y, Side::Y, report)
}

/// One way of computing `int f`: integrals of `f+`, `f-` and `|f|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Way {
    pub integrable: bool,
    pub positive: f64,
    pub negative: f64,
    pub abs: f64,
    /// `positive - negative` when integrable.
    pub value: Option<f64>,
}

impl Way {
    fn new(positive: f64, negative: f64, abs: f64) -> Self {
        let integrable = abs.is_finite();
        Self { integrable, positive, negative, abs, value: integrable.then_some(positive - negative) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntegrabilityReport {
    pub joint: Way,
    pub xy: Way,
    pub yx: Way,
    pub integrable: bool,
    /// Largest pairwise difference of the three values (0 when not integrable).
    pub max_gap: f64,
}

fn joint_part<F: PairFunction + ?Sized>(f: &F, zeta: &JointMeasure, part: Part) -> Result<f64> {
    let mut acc = CompensatedSum::new();
    for e in zeta.entries() {
        acc.add(part.apply(eval_at(f, zeta, e.i, e.j)?) * e.w);
    }
    Ok(acc.value())
}

/// Integrability of `f` judged three ways: against `zeta`, through the
/// X-side fibers and through the Y-side fibers. The verdicts must agree.
pub fn integrability_report<F: PairFunction + ?Sized>(
    f: &F,
    disintegration: &Disintegration,
    disintegration_y: &Disintegration,
    zeta: &JointMeasure,
) -> Result<IntegrabilityReport> {
    let joint = Way::new(
        joint_part(f, zeta, Part::Positive)?,
        joint_part(f, zeta, Part::Negative)?,
        joint_part(f, zeta, Part::Abs)?,
    );
    let way = |d: &Disintegration, side: Side| -> Result<Way> {
        Ok(Way::new(
            iterate(f, d, side, Part::Positive)?.value,
            iterate(f, d, side, Part::Negative)?.value,
            iterate(f, d, side, Part::Abs)?.value,
        ))
    };
    let xy = way(disintegration, Side::X)?;
    let yx = way(disintegration_y, Side::Y)?;
    if joint.integrable != xy.integrable || joint.integrable != yx.integrable {
        return Err(Error::DisintegrationInconsistent(format!(
            "integrability verdicts differ: joint {}, xy {}, yx {}",
            joint.integrable, xy.integrable, yx.integrable
        )));
    }
    let max_gap = match (joint.value, xy.value, yx.value) {
        (Some(a), Some(b), Some(c)) => (a - b).abs().max((a - c).abs()).max((b - c).abs()),
        _ => 0.0,
    };
    Ok(IntegrabilityReport { joint, xy, yx, integrable: joint.integrable, max_gap })
}

/// `sum_k lambda_k 1_{C_k}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimpleFunction {
    pub terms: Vec<(f64, ProductSet)>,
}

impl SimpleFunction {
    pub fn value(&self, i: usize, j: usize) -> f64 {
        compensated_sum(self.terms.iter().filter(|(_, c)| c.contains(i, j)).map(|(l, _)| *l))
    }
}

impl PairFunction for SimpleFunction {
    fn eval(&self, at: PairPoint<'_>) -> f64 {
        self.value(at.i, at.j)
    }
}

/// `f_k = min(floor(2^k f) / 2^k, k)` on the support of `zeta`, `k = 1..=levels`.
/// Each `f_k` is stored as disjoint level sets.
pub fn simple_approximation<F: PairFunction + ?Sized>(
    f: &F,
    zeta: &JointMeasure,
    levels: u32,
) -> Result<Vec<SimpleFunction>> {
    let values: Vec<(usize, usize, f64)> = zeta
        .entries()
        .iter()
        .map(|e| {
            let v = eval_at(f, zeta, e.i, e.j)?;
            if v < 0.0 {
                return Err(Error::NegativeFunction { i: e.i, j: e.j, value: v });
            }
            Ok((e.i, e.j, v))
        })
        .collect::<Result<_>>()?;
    let (nx, ny) = (zeta.carrier_x().len(), zeta.carrier_y().len());
    (1..=levels)
        .map(|k| {
            let cap = f64::from(k);
            let scale = 2f64.powi(k as i32);
            let mut sets: std::collections::BTreeMap<u64, BTreeSet<(usize, usize)>> = Default::default();
            for &(i, j, v) in &values {
                let level = (v.min(cap) * scale).floor() / scale;
                if level > 0.0 {
                    sets.entry(level.to_bits()).or_default().insert((i, j));
                }
            }
            let terms = sets
                .into_iter()
                .map(|(bits, pairs)| Ok((f64::from_bits(bits), ProductSet::pairs(nx, ny, pairs)?)))
                .collect::<Result<_>>()?;
            Ok(SimpleFunction { terms })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::disintegration::exact_disintegration;
    use crate::measure::{integrate, PointCloud};
    use std::sync::Arc;

    fn table() -> JointMeasure {
        let cx = Arc::new(PointCloud::line(&[0.0, 1.0, 2.0]).unwrap());
        let cy = Arc::new(PointCloud::line(&[0.0, 0.5]).unwrap());
        JointMeasure::new(cx, cy, [(0, 0, 0.125), (0, 1, 0.25), (1, 1, 0.375), (2, 0, 0.25)]).unwrap()
    }

    #[test]
    fn constant_one() {
        let z = table();
        let dx = exact_disintegration(&z);
        let dy = exact_disintegration(&z.transpose());
        let one = |_: PairPoint<'_>| 1.0;
        assert!((iterated_xy(&one, &dx).unwrap().value - 1.0).abs() < 1e-15);
        assert!((iterated_yx(&one, &dy).unwrap().value - 1.0).abs() < 1e-15);
    }

    #[test]
    fn indicator_gives_joint_mass() {
        let z = table();
        let dx = exact_disintegration(&z);
        let dy = exact_disintegration(&z.transpose());
        let c = ProductSet::pairs(3, 2, [(0, 1), (2, 0), (2, 1)]).unwrap();
        let f = SimpleFunction { terms: vec![(1.0, c.clone())] };
        let expected = z.measure_of(&c);
        assert!((iterated_xy(&f, &dx).unwrap().value - expected).abs() < 1e-15);
        assert!((iterated_yx(&f, &dy).unwrap().value - expected).abs() < 1e-15);
    }

    #[test]
    fn diagonal_product_of_coordinates() {
        let n = 100;
        let pts: Vec<f64> = (0..n).map(|i| i as f64 / n as f64).collect();
        let c = Arc::new(PointCloud::line(&pts).unwrap());
        let z = JointMeasure::new(c.clone(), c, (0..n).map(|i| (i, i, 1.0 / n as f64))).unwrap();
        let d = exact_disintegration(&z);
        let f = |p: PairPoint<'_>| p.x[0] * p.y[0];
        let mut oracle = 0.0;
        for i in 0..n {
            let t = i as f64 / n as f64;
            oracle += t * t / n as f64;
        }
        assert!((iterated_xy(&f, &d).unwrap().value - oracle).abs() < 1e-12);
    }

    #[test]
    fn negative_needs_report() {
        let z = table();
        let dx = exact_disintegration(&z);
        let dy = exact_disintegration(&z.transpose());
        let f = |p: PairPoint<'_>| p.x[0] - 1.0;
        assert!(matches!(iterated_xy(&f, &dx), Err(Error::NeedsIntegrabilityCheck)));
        let r = integrability_report(&f, &dx, &dy, &z).unwrap();
        assert!(r.integrable);
        let joint = integrate(&f, &z).unwrap();
        assert!((iterated_xy_checked(&f, &dx, &r).unwrap().value - joint).abs() < 1e-15);
        assert!((iterated_yx_checked(&f, &dy, &r).unwrap().value - joint).abs() < 1e-15);
    }

    #[test]
    fn infinite_values_are_not_integrable_everywhere() {
        let z = table();
        let dx = exact_disintegration(&z);
        let dy = exact_disintegration(&z.transpose());
        let f = |p: PairPoint<'_>| if p.i == 1 { f64::INFINITY } else { 1.0 };
        let r = integrability_report(&f, &dx, &dy, &z).unwrap();
        assert!(!r.integrable && !r.xy.integrable && !r.yx.integrable);
        assert!(matches!(iterated_xy_checked(&f, &dx, &r), Err(Error::NotIntegrable)));
        assert_eq!(iterated_xy(&f, &dx).unwrap().value, f64::INFINITY);
    }

    #[test]
    fn single_atom_scaled_to_target() {
        let z = table();
        let dx = exact_disintegration(&z);
        let dy = exact_disintegration(&z.transpose());
        let f = |p: PairPoint<'_>| if (p.i, p.j) == (1, 1) { -3.7 / 0.375 } else { 0.0 };
        let r = integrability_report(&f, &dx, &dy, &z).unwrap();
        for w in [r.joint, r.xy, r.yx] {
            assert!((w.abs - 3.7).abs() < 1e-12);
            assert!((w.value.unwrap() + 3.7).abs() < 1e-12);
        }
    }

    #[test]
    fn staircase_on_grid() {
        let g: Vec<f64> = (0..4).map(|i| i as f64 / 3.0).collect();
        let c = Arc::new(PointCloud::line(&g).unwrap());
        let mut entries = Vec::new();
        for i in 0..4 {
            for j in 0..4 {
                entries.push((i, j, 1.0 / 16.0));
            }
        }
        let z = JointMeasure::new(c.clone(), c, entries).unwrap();
        let f = |p: PairPoint<'_>| p.x[0] + p.y[0];
        let fs = simple_approximation(&f, &z, 8).unwrap();
        let f8 = &fs[7];
        for e in z.entries() {
            let exact = g[e.i] + g[e.j];
            let approx = f8.value(e.i, e.j);
            assert!(approx <= exact && exact - approx <= 2f64.powi(-8));
        }
    }

    #[test]
    fn staircase_of_constants() {
        let z = table();
        assert!(simple_approximation(&|_: PairPoint<'_>| 0.0, &z, 4).unwrap().iter().all(|s| s.terms.is_empty()));
        for s in simple_approximation(&|_: PairPoint<'_>| 1.0, &z, 4).unwrap() {
            for e in z.entries() {
                assert_eq!(s.value(e.i, e.j), 1.0);
            }
        }
        assert!(matches!(simple_approximation(&|_: PairPoint<'_>| -1.0, &z, 1), Err(Error::NegativeFunction { .. })));
    }
}
