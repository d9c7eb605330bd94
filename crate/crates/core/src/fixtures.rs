//! Deterministic fixtures and seeded random instances.

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::measure::{marginal_x, marginal_y, DiscreteMeasure, JointMeasure, PointCloud, ProductSet};
use crate::metric::Metric;
use crate::transport::{c_transform_psi, CostFunction, CostMatrix, PricePair, TransferencePlan};

pub use rand::SeedableRng;

pub type FixtureRng = ChaCha8Rng;

pub fn rng(seed: u64) -> FixtureRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// The 2 x 2 table `{(0,0): 0.2, (0,1): 0.3, (1,0): 0.5}` on `{0, 1}`.
pub fn two_by_two() -> JointMeasure {
    let c = Arc::new(PointCloud::line(&[0.0, 1.0]).expect("valid"));
    JointMeasure::new(c.clone(), c, [(0, 0, 0.2), (0, 1, 0.3), (1, 0, 0.5)]).expect("valid")
}

/// Product of two dyadic-weight measures on `{0, 1, 2, 3}`.
pub fn product_fixture() -> JointMeasure {
    let c = Arc::new(PointCloud::line(&[0.0, 1.0, 2.0, 3.0]).expect("valid"));
    let mu = DiscreteMeasure::new(c.clone(), vec![0.125, 0.375, 0.25, 0.25]).expect("valid");
    let nu = DiscreteMeasure::new(c, vec![0.5, 0.25, 0.125, 0.125]).expect("valid");
    JointMeasure::product(&mu, &nu).expect("valid")
}

/// Uniform measure on the diagonal `{(t_i, t_i)}`, `t_i = i / (n - 1)`.
pub fn diagonal(n: usize, empirical: bool) -> JointMeasure {
    let pts: Vec<f64> = if n == 1 { vec![0.0] } else { (0..n).map(|i| i as f64 / (n - 1) as f64).collect() };
    let c = Arc::new(PointCloud::line(&pts).expect("valid"));
    let w = 1.0 / n as f64;
    let last = 1.0 - w * (n - 1) as f64;
    JointMeasure::new(c.clone(), c, (0..n).map(|i| (i, i, if i + 1 == n { last } else { w })))
        .expect("valid")
        .with_empirical(empirical)
}

#[derive(Debug, Clone, Copy)]
pub struct RandomJoint {
    pub max_x: usize,
    pub max_y: usize,
    /// Every row receives mass.
    pub full_rows: bool,
    /// Weights are multiples of `2^-weight_bits` (exact sums).
    pub weight_bits: Option<u32>,
    /// Probability that a cell is in the support.
    pub density: f64,
    /// Use 2-D points under the given metric instead of the line.
    pub planar: Option<Metric>,
}

impl Default for RandomJoint {
    fn default() -> Self {
        Self { max_x: 20, max_y: 20, full_rows: false, weight_bits: None, density: 0.4, planar: None }
    }
}

/// Distinct integer points: on the line, or on a grid in the plane.
fn integer_cloud(rng: &mut FixtureRng, n: usize, planar: Option<Metric>) -> PointCloud {
    match planar {
        None => {
            let mut pool: Vec<i32> = (0..(4 * n as i32 + 4)).collect();
            pool.shuffle(rng);
            PointCloud::line(&pool[..n].iter().map(|&v| f64::from(v)).collect::<Vec<_>>()).expect("valid")
        }
        Some(metric) => {
            let side = 2 * n as i32 + 2;
            let mut pool: Vec<(i32, i32)> = (0..side).flat_map(|a| (0..side).map(move |b| (a, b))).collect();
            pool.shuffle(rng);
            let pts = pool[..n].iter().map(|&(a, b)| vec![f64::from(a), f64::from(b)]).collect();
            PointCloud::new(pts, metric).expect("valid")
        }
    }
}

pub fn random_joint(rng: &mut FixtureRng, opts: RandomJoint) -> Result<JointMeasure> {
    let nx = rng.gen_range(1..=opts.max_x);
    let ny = rng.gen_range(1..=opts.max_y);
    let cx = Arc::new(integer_cloud(rng, nx, opts.planar));
    let cy = Arc::new(integer_cloud(rng, ny, opts.planar));
    let mut cells: Vec<(usize, usize)> = Vec::new();
    for i in 0..nx {
        let before = cells.len();
        for j in 0..ny {
            if rng.gen_bool(opts.density) {
                cells.push((i, j));
            }
        }
        if opts.full_rows && cells.len() == before {
            cells.push((i, rng.gen_range(0..ny)));
        }
    }
    if cells.is_empty() {
        cells.push((rng.gen_range(0..nx), rng.gen_range(0..ny)));
    }
    let weights = random_weights(rng, cells.len(), opts.weight_bits);
    JointMeasure::new(cx, cy, cells.into_iter().zip(weights).map(|((i, j), w)| (i, j, w)))
}

/// Positive weights summing to 1; with `bits`, multiples of `2^-bits`.
pub fn random_weights(rng: &mut FixtureRng, n: usize, bits: Option<u32>) -> Vec<f64> {
    match bits {
        Some(b) => {
            let total = 1u64 << b;
            assert!(n as u64 <= total, "too many atoms for the weight resolution");
            // n - 1 distinct cut points in 1..total.
            let mut cuts: Vec<u64> =
                rand::seq::index::sample(rng, (total - 1) as usize, n - 1).into_iter().map(|c| c as u64 + 1).collect();
            cuts.sort_unstable();
            let mut prev = 0;
            let scale = 1.0 / total as f64;
            let mut w: Vec<f64> = cuts
                .iter()
                .map(|&c| {
                    let v = (c - prev) as f64 * scale;
                    prev = c;
                    v
                })
                .collect();
            w.push((total - prev) as f64 * scale);
            w
        }
        None => {
            let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..1.0)).collect();
            let s: f64 = raw.iter().sum();
            let mut w: Vec<f64> = raw.iter().map(|r| r / s).collect();
            let head: f64 = crate::sum::compensated_sum(w[..n - 1].iter().copied());
            w[n - 1] = 1.0 - head;
            w
        }
    }
}

pub fn random_product_set(rng: &mut FixtureRng, nx: usize, ny: usize) -> ProductSet {
    if rng.gen_bool(0.3) {
        let xs: Vec<usize> = (0..nx).filter(|_| rng.gen_bool(0.5)).collect();
        let ys: Vec<usize> = (0..ny).filter(|_| rng.gen_bool(0.5)).collect();
        ProductSet::rectangle(nx, ny, xs, ys).expect("in range")
    } else {
        let p = rng.gen_range(0.0..1.0);
        let pairs: Vec<(usize, usize)> =
            (0..nx).flat_map(|i| (0..ny).map(move |j| (i, j))).filter(|_| rng.gen_bool(p)).collect();
        ProductSet::pairs(nx, ny, pairs).expect("in range")
    }
}

/// A random transport problem with `|X|, |Y| <= max`.
#[derive(Debug, Clone)]
pub struct OtProblem {
    pub mu: DiscreteMeasure,
    pub nu: DiscreteMeasure,
    pub cost: CostFunction,
    pub matrix: CostMatrix,
}

pub fn random_ot(rng: &mut FixtureRng, max: usize, infinite_cells: bool) -> OtProblem {
    let n = rng.gen_range(1..=max);
    let m = rng.gen_range(1..=max);
    let cx = Arc::new(integer_cloud(rng, n, None));
    let cy = Arc::new(integer_cloud(rng, m, None));
    let mu = DiscreteMeasure::new(cx.clone(), random_weights(rng, n, None)).expect("valid");
    let nu = DiscreteMeasure::new(cy.clone(), random_weights(rng, m, None)).expect("valid");
    let cost = match rng.gen_range(0..3) {
        0 => CostFunction::SquaredDistance,
        1 => CostFunction::Distance,
        _ => {
            let table = (0..n)
                .map(|_| {
                    (0..m)
                        .map(|_| {
                            if infinite_cells && rng.gen_bool(0.15) {
                                f64::INFINITY
                            } else {
                                f64::from(rng.gen_range(0..20))
                            }
                        })
                        .collect()
                })
                .collect();
            CostFunction::Table { table }
        }
    };
    let matrix = cost.matrix(&cx, &cy).expect("valid");
    OtProblem { mu, nu, cost, matrix }
}

/// A random plan with finite cost on its support, competitive prices
/// `phi = S(psi) - slack` and the cost table.
pub fn random_competitive(rng: &mut FixtureRng, max: usize) -> (TransferencePlan, PricePair, CostMatrix) {
    let z = random_joint(rng, RandomJoint { max_x: max, max_y: max, ..Default::default() }).expect("valid");
    let (n, m) = (z.carrier_x().len(), z.carrier_y().len());
    let values = (0..n * m).map(|_| f64::from(rng.gen_range(0..20)) * 0.5).collect();
    let c = CostMatrix::new(n, m, values).expect("valid");
    let psi: Vec<f64> = (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect();
    let phi: Vec<f64> = c_transform_psi(&psi, &c)
        .into_iter()
        .map(|p| if rng.gen_bool(0.1) { f64::NEG_INFINITY } else { p - rng.gen_range(0.0..1.0) })
        .collect();
    let plan = TransferencePlan::new(z.clone(), marginal_x(&z), marginal_y(&z)).expect("own marginals");
    (plan, PricePair::new(psi, phi).expect("valid"), c)
}

/// Constructed conjugacy violations: `(name, plan, prices, cost)`. Each must
/// be flagged, either as an almost-sure failure or as non-competitive input.
pub fn violation_fixtures() -> Vec<(&'static str, TransferencePlan, PricePair, CostMatrix)> {
    let n = 4;
    let diag = diagonal(n, false);
    let c = CostFunction::SquaredDistance.matrix(diag.carrier_x(), diag.carrier_y()).expect("valid");
    let plan = TransferencePlan::from_joint(diag);
    let mut out = Vec::new();

    let mut phi = vec![0.0; n];
    phi[1] = -0.125;
    out.push(("lowered-phi", plan.clone(), PricePair::new(vec![0.0; n], phi).expect("valid"), c.clone()));

    let mut psi = vec![0.0; n];
    psi[2] = 0.5;
    out.push(("raised-psi", plan.clone(), PricePair::new(psi, vec![0.0; n]).expect("valid"), c.clone()));

    let mut phi = vec![0.0; n];
    phi[3] = 0.25;
    out.push(("non-competitive", plan.clone(), PricePair::new(vec![0.0; n], phi).expect("valid"), c.clone()));

    let mut psi = vec![0.0; n];
    psi[0] = f64::INFINITY;
    out.push(("infinite-psi-on-support", plan, PricePair::new(psi, vec![0.0; n]).expect("valid"), c));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dyadic_weights_sum_exactly() {
        let mut r = rng(7);
        for n in 1..50 {
            let w = random_weights(&mut r, n, Some(10));
            assert_eq!(w.len(), n);
            assert!(w.iter().all(|&x| x > 0.0));
            assert_eq!(w.iter().sum::<f64>(), 1.0);
        }
    }

    #[test]
    fn random_joint_is_reproducible() {
        let a = random_joint(&mut rng(3), RandomJoint::default()).unwrap();
        let b = random_joint(&mut rng(3), RandomJoint::default()).unwrap();
        assert_eq!(a.entries(), b.entries());
    }

    #[test]
    fn full_rows() {
        let mut r = rng(11);
        for _ in 0..20 {
            let z = random_joint(&mut r, RandomJoint { full_rows: true, ..Default::default() }).unwrap();
            assert!((0..z.carrier_x().len()).all(|i| !z.row(i).is_empty()));
        }
    }

    #[test]
    fn diagonal_weights() {
        let z = diagonal(10_000, true);
        assert!(z.is_empirical());
        assert_eq!(z.entries().len(), 10_000);
        assert_eq!(z.carrier_x().point(9_999), &[1.0]);
    }
}
