//! Ball-ratio densities: `zeta(B_rho(x) x O) / mu(B_rho(x))` along a
//! shrinking schedule of radii.
//!
//! A [`RatioProbe`] fixes `x` and precomputes, for every X-atom, the deepest
//! scale whose open ball around `x` still contains it. Evaluating a lattice
//! set then costs one pass over the joint entries inside the coarsest ball
//! of interest.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use num_rational::BigRational;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use super::schedule::ScaleSchedule;
use crate::error::{Error, Result};
use crate::lattice::LatticeSet;
use crate::measure::{DiscreteMeasure, JointMeasure, PointCloud};
use crate::sum::CompensatedSum;

/// Exact (atomic) inputs versus empirical samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    Exact,
    Empirical,
}

impl Regime {
    pub fn of(zeta: &JointMeasure) -> Self {
        if zeta.is_empirical() {
            Regime::Empirical
        } else {
            Regime::Exact
        }
    }

    /// Largest admissible `l_upper - l_lower` outside the exceptional set.
    pub fn tolerance(self) -> f64 {
        match self {
            Regime::Exact => 1e-6,
            Regime::Empirical => 0.02,
        }
    }

    /// Fewest atoms a ball must hold for its scale to count as resolved.
    pub fn min_ball_atoms(self) -> usize {
        match self {
            Regime::Exact => 1,
            Regime::Empirical => 32,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioConfig {
    /// Number of finest defined scales used for the limsup/liminf proxies.
    pub tail: usize,
    pub min_ball_atoms: usize,
}

impl Default for RatioConfig {
    fn default() -> Self {
        Self::for_regime(Regime::Exact)
    }
}

impl RatioConfig {
    pub fn for_regime(regime: Regime) -> Self {
        Self { tail: 3, min_ball_atoms: regime.min_ball_atoms() }
    }
}

/// Per-scale ratios of one lattice set at one point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioEstimate {
    /// `None` where the scale is undefined or was not evaluated.
    pub ratios: Vec<Option<f64>>,
    pub defined_mask: Vec<bool>,
    /// Max over the tail window.
    pub l_upper: f64,
    /// Min over the tail window.
    pub l_lower: f64,
    /// Ratio at the finest defined scale.
    pub value: f64,
}

impl RatioEstimate {
    pub fn spread(&self) -> f64 {
        self.l_upper - self.l_lower
    }
}

/// A set function `O -> l_x(O)` on the lattice for one fixed `x`.
pub trait FiberFunctional {
    fn carrier(&self) -> &PointCloud;

    fn evaluate(&self, set: &LatticeSet) -> RatioEstimate;

    fn l_x(&self, set: &LatticeSet) -> f64 {
        self.evaluate(set).value
    }

    /// Coarsest radius in the tail window; chains closer than this to their
    /// limit cannot be told apart from it.
    fn resolution(&self) -> f64;

    /// Whether `l_x` restricted to carrier subsets is additive. Both built-in
    /// implementations are, because `value` is read at a single scale.
    fn is_additive(&self) -> bool {
        true
    }
}

/// `mu_O(A) = zeta(A x O)`.
pub fn mu_o(zeta: &JointMeasure, a: &BTreeSet<usize>, set: &LatticeSet) -> f64 {
    let cy = zeta.carrier_y();
    let mut acc = CompensatedSum::new();
    let mut member: BTreeMap<usize, bool> = BTreeMap::new();
    for &i in a {
        if i >= zeta.carrier_x().len() {
            continue;
        }
        for e in zeta.row(i) {
            let inside = *member.entry(e.j).or_insert_with(|| set.contains(cy, e.j));
            if inside {
                acc.add(e.w);
            }
        }
    }
    acc.value()
}

#[derive(Debug, Clone)]
pub struct RatioProbe<'a> {
    zeta: &'a JointMeasure,
    schedule: ScaleSchedule,
    config: RatioConfig,
    /// `(row, deepest level)`, sorted by row.
    members: Vec<(usize, usize)>,
    ball_mass: Vec<f64>,
    ball_atoms: Vec<usize>,
    defined: Vec<bool>,
    /// Ascending scale indices of the tail window.
    tail: Vec<usize>,
    /// `(j, zeta(B_k x {y_j}) for each tail scale)`, sorted by `j`.
    tail_mass: Vec<(usize, Vec<f64>)>,
}

impl<'a> RatioProbe<'a> {
    pub fn new(
        zeta: &'a JointMeasure,
        mu: &DiscreteMeasure,
        x: &[f64],
        schedule: &ScaleSchedule,
        config: RatioConfig,
    ) -> Result<Self> {
        let cx = zeta.carrier_x();
        if x.len() != cx.dim() {
            return Err(Error::InvalidCloud(format!(
                "query point has dimension {}, carrier has {}",
                x.len(),
                cx.dim()
            )));
        }
        let k_len = schedule.len();
        let metric = cx.metric();
        let radii = schedule.radii();

        let mut members = Vec::new();
        for i in 0..cx.len() {
            if mu.weight(i) <= 0.0 {
                continue;
            }
            let p = cx.point(i);
            // Levels form a prefix 0..=L of the schedule; binary search for L.
            if metric.compare_f64(x, p, radii[0]) != Ordering::Less {
                continue;
            }
            let (mut lo, mut hi) = (0usize, k_len - 1);
            while lo < hi {
                let mid = (lo + hi).div_ceil(2);
                if metric.compare_f64(x, p, radii[mid]) == Ordering::Less {
                    lo = mid;
                } else {
                    hi = mid - 1;
                }
            }
            members.push((i, lo));
        }

        let mut bucket_mass = vec![CompensatedSum::new(); k_len];
        let mut bucket_atoms = vec![0usize; k_len];
        for &(i, level) in &members {
            bucket_mass[level].add(mu.weight(i));
            bucket_atoms[level] += 1;
        }
        let mut ball_mass = vec![0.0; k_len];
        let mut ball_atoms = vec![0usize; k_len];
        let mut acc = CompensatedSum::new();
        let mut atoms = 0usize;
        for k in (0..k_len).rev() {
            acc.add(bucket_mass[k].value());
            atoms += bucket_atoms[k];
            ball_mass[k] = acc.value();
            ball_atoms[k] = atoms;
        }
        let defined: Vec<bool> =
            (0..k_len).map(|k| ball_mass[k] > 0.0 && ball_atoms[k] >= config.min_ball_atoms.max(1)).collect();
        let defined_scales: Vec<usize> = (0..k_len).filter(|&k| defined[k]).collect();
        if defined_scales.is_empty() {
            return Err(Error::OutsideSupport);
        }
        let t = config.tail.max(1).min(defined_scales.len());
        let tail = defined_scales[defined_scales.len() - t..].to_vec();

        let coarsest = tail[0];
        let mut acc_y: BTreeMap<usize, Vec<CompensatedSum>> = BTreeMap::new();
        for &(i, level) in &members {
            if level < coarsest {
                continue;
            }
            for e in zeta.row(i) {
                let slot = acc_y.entry(e.j).or_insert_with(|| vec![CompensatedSum::new(); tail.len()]);
                for (s, &k) in tail.iter().enumerate() {
                    if level >= k {
                        slot[s].add(e.w);
                    }
                }
            }
        }
        let tail_mass = acc_y.into_iter().map(|(j, v)| (j, v.iter().map(CompensatedSum::value).collect())).collect();

        Ok(Self { zeta, schedule: schedule.clone(), config, members, ball_mass, ball_atoms, defined, tail, tail_mass })
    }

    /// Probe at X-atom `i`.
    pub fn at_atom(
        zeta: &'a JointMeasure,
        mu: &DiscreteMeasure,
        i: usize,
        schedule: &ScaleSchedule,
        config: RatioConfig,
    ) -> Result<Self> {
        zeta.carrier_x().check_index(i)?;
        let x = zeta.carrier_x().point(i).to_vec();
        Self::new(zeta, mu, &x, schedule, config)
    }

    pub fn schedule(&self) -> &ScaleSchedule {
        &self.schedule
    }

    pub fn config(&self) -> RatioConfig {
        self.config
    }

    pub fn defined_mask(&self) -> &[bool] {
        &self.defined
    }

    pub fn tail_scales(&self) -> &[usize] {
        &self.tail
    }

    pub fn finest_scale(&self) -> usize {
        *self.tail.last().expect("nonempty tail")
    }

    pub fn ball_mass(&self, k: usize) -> f64 {
        self.ball_mass[k]
    }

    pub fn ball_atoms(&self, k: usize) -> usize {
        self.ball_atoms[k]
    }

    /// Ratios of every carrier singleton `{y_j}` over the tail window.
    pub fn singleton_ratios(&self) -> impl Iterator<Item = (usize, Vec<f64>)> + '_ {
        self.tail_mass.iter().map(move |(j, masses)| {
            let r = masses.iter().zip(&self.tail).map(|(m, &k)| (m / self.ball_mass[k]).clamp(0.0, 1.0)).collect();
            (*j, r)
        })
    }

    fn summarize(&self, ratios: Vec<Option<f64>>) -> RatioEstimate {
        let window: Vec<f64> = self.tail.iter().map(|&k| ratios[k].unwrap_or(0.0)).collect();
        let l_upper = window.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let l_lower = window.iter().copied().fold(f64::INFINITY, f64::min);
        RatioEstimate {
            ratios,
            defined_mask: self.defined.clone(),
            l_upper,
            l_lower,
            value: *window.last().expect("nonempty tail"),
        }
    }

    /// Ratios on the tail window only; cheap.
    pub fn tail_estimate(&self, set: &LatticeSet) -> RatioEstimate {
        let cy = self.zeta.carrier_y();
        let mut acc = vec![CompensatedSum::new(); self.tail.len()];
        for (j, masses) in &self.tail_mass {
            if set.contains(cy, *j) {
                for (a, m) in acc.iter_mut().zip(masses) {
                    a.add(*m);
                }
            }
        }
        let mut ratios = vec![None; self.schedule.len()];
        for (a, &k) in acc.iter().zip(&self.tail) {
            ratios[k] = Some((a.value() / self.ball_mass[k]).clamp(0.0, 1.0));
        }
        self.summarize(ratios)
    }

    /// Ratios at every defined scale.
    pub fn full_estimate(&self, set: &LatticeSet) -> RatioEstimate {
        let cy = self.zeta.carrier_y();
        let k_len = self.schedule.len();
        let mut membership: BTreeMap<usize, bool> = BTreeMap::new();
        let mut bucket = vec![CompensatedSum::new(); k_len];
        for &(i, level) in &self.members {
            for e in self.zeta.row(i) {
                let inside = *membership.entry(e.j).or_insert_with(|| set.contains(cy, e.j));
                if inside {
                    bucket[level].add(e.w);
                }
            }
        }
        let mut ratios = vec![None; k_len];
        let mut acc = CompensatedSum::new();
        for k in (0..k_len).rev() {
            acc.add(bucket[k].value());
            if self.defined[k] {
                ratios[k] = Some((acc.value() / self.ball_mass[k]).clamp(0.0, 1.0));
            }
        }
        self.summarize(ratios)
    }

    /// Exact rational ratio at scale `k`; `None` if the scale is undefined.
    pub fn ratio_exact(&self, set: &LatticeSet, k: usize) -> Option<BigRational> {
        if !self.defined.get(k).copied().unwrap_or(false) {
            return None;
        }
        let cy = self.zeta.carrier_y();
        let mut num = BigRational::zero();
        let mut den = BigRational::zero();
        for &(i, level) in &self.members {
            if level < k {
                continue;
            }
            for e in self.zeta.row(i) {
                let w = BigRational::from_float(e.w).expect("finite weight");
                if set.contains(cy, e.j) {
                    num += &w;
                }
                den += w;
            }
        }
        if den.is_zero() {
            None
        } else {
            Some(num / den)
        }
    }
}

impl FiberFunctional for RatioProbe<'_> {
    fn carrier(&self) -> &PointCloud {
        self.zeta.carrier_y()
    }

    fn evaluate(&self, set: &LatticeSet) -> RatioEstimate {
        self.tail_estimate(set)
    }

    fn resolution(&self) -> f64 {
        self.schedule.radius(self.tail[0])
    }
}

/// `limsup/liminf_k mu_O(B_k(x)) / mu(B_k(x))` proxies at point `x`.
pub fn ball_ratio(
    zeta: &JointMeasure,
    mu: &DiscreteMeasure,
    x: &[f64],
    set: &LatticeSet,
    schedule: &ScaleSchedule,
    config: RatioConfig,
) -> Result<RatioEstimate> {
    Ok(RatioProbe::new(zeta, mu, x, schedule, config)?.full_estimate(set))
}

/// A probability measure on a Y carrier with sparse atoms, used for fibers.
#[derive(Debug, Clone, PartialEq)]
pub struct FiberMeasure {
    carrier: Arc<PointCloud>,
    atoms: Vec<(usize, f64)>,
}

impl FiberMeasure {
    /// Atoms must have distinct indices; zero weights are dropped.
    pub fn new(carrier: Arc<PointCloud>, mut atoms: Vec<(usize, f64)>) -> Self {
        atoms.retain(|&(_, w)| w > 0.0);
        atoms.sort_by_key(|&(j, _)| j);
        Self { carrier, atoms }
    }

    pub fn carrier(&self) -> &Arc<PointCloud> {
        &self.carrier
    }

    pub fn atoms(&self) -> &[(usize, f64)] {
        &self.atoms
    }

    pub fn weight(&self, j: usize) -> f64 {
        self.atoms.binary_search_by_key(&j, |&(k, _)| k).map_or(0.0, |k| self.atoms[k].1)
    }

    pub fn total_mass(&self) -> f64 {
        crate::sum::compensated_sum(self.atoms.iter().map(|&(_, w)| w))
    }

    pub fn mass_of(&self, ys: &BTreeSet<usize>) -> f64 {
        crate::sum::compensated_sum(self.atoms.iter().filter(|(j, _)| ys.contains(j)).map(|&(_, w)| w))
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.carrier.len()];
        for &(j, w) in &self.atoms {
            out[j] = w;
        }
        out
    }

    pub fn to_discrete(&self) -> Result<DiscreteMeasure> {
        DiscreteMeasure::new(self.carrier.clone(), self.to_dense())
    }
}

impl FiberFunctional for FiberMeasure {
    fn carrier(&self) -> &PointCloud {
        &self.carrier
    }

    fn evaluate(&self, set: &LatticeSet) -> RatioEstimate {
        let v = crate::sum::compensated_sum(
            self.atoms.iter().filter(|(j, _)| set.contains(&self.carrier, *j)).map(|&(_, w)| w),
        );
        RatioEstimate { ratios: vec![Some(v)], defined_mask: vec![true], l_upper: v, l_lower: v, value: v }
    }

    fn resolution(&self) -> f64 {
        0.0
    }
}
