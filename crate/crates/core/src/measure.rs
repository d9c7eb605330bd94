//! Finite carriers, discrete measures on them, and sparse joint measures.

use std::collections::BTreeSet;
use std::sync::Arc;

use log::warn;

use crate::error::{Error, Result};
use crate::metric::Metric;
use crate::sum::CompensatedSum;

/// Total-mass tolerance for probability measures.
pub const MASS_TOL: f64 = 1e-12;

/// A finite metric space: points of a common dimension under one metric.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    coords: Vec<f64>,
    dim: usize,
    metric: Metric,
}

impl PointCloud {
    pub fn new(points: Vec<Vec<f64>>, metric: Metric) -> Result<Self> {
        let dim = points.first().map_or(1, Vec::len);
        if dim == 0 {
            return Err(Error::InvalidCloud("dimension must be at least 1".into()));
        }
        if metric == Metric::AbsoluteDifference && dim != 1 {
            return Err(Error::InvalidCloud(format!("absolute-difference metric needs dimension 1, got {dim}")));
        }
        let mut coords = Vec::with_capacity(points.len() * dim);
        for (i, p) in points.iter().enumerate() {
            if p.len() != dim {
                return Err(Error::InvalidCloud(format!("point {i} has dimension {}, expected {dim}", p.len())));
            }
            if let Some(c) = p.iter().find(|c| !c.is_finite()) {
                return Err(Error::InvalidCloud(format!("point {i} has coordinate {c}")));
            }
            coords.extend_from_slice(p);
        }
        Ok(Self { coords, dim, metric })
    }

    /// Points `x_0, ..., x_{n-1}` on the real line.
    pub fn line(xs: &[f64]) -> Result<Self> {
        Self::new(xs.iter().map(|&x| vec![x]).collect(), Metric::AbsoluteDifference)
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn metric(&self) -> Metric {
        self.metric
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks_exact(self.dim)
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        self.metric.distance(self.point(i), self.point(j))
    }

    /// Largest pairwise distance (0 for fewer than two points).
    pub fn diameter(&self) -> f64 {
        if self.metric == Metric::AbsoluteDifference {
            let (lo, hi) =
                self.coords.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
            return if self.len() < 2 { 0.0 } else { hi - lo };
        }
        let n = self.len();
        (0..n).map(|i| ((i + 1)..n).map(|j| self.distance(i, j)).fold(0.0, f64::max)).fold(0.0, f64::max)
    }

    /// Smallest distance between two distinct indices (`inf` for fewer than two points).
    pub fn min_separation(&self) -> f64 {
        let n = self.len();
        let mut best = f64::INFINITY;
        for i in 0..n {
            for j in (i + 1)..n {
                best = best.min(self.distance(i, j));
            }
        }
        best
    }

    pub fn check_index(&self, i: usize) -> Result<()> {
        if i < self.len() {
            Ok(())
        } else {
            Err(Error::IndexOutOfRange { index: i, len: self.len() })
        }
    }
}

/// Nonnegative weights, one per carrier point.
#[derive(Debug, Clone)]
pub struct DiscreteMeasure {
    carrier: Arc<PointCloud>,
    weights: Vec<f64>,
}

impl DiscreteMeasure {
    /// A probability measure; weights must be nonnegative and sum to 1.
    pub fn new(carrier: Arc<PointCloud>, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != carrier.len() {
            return Err(Error::InvalidMeasure(format!("{} weights for {} points", weights.len(), carrier.len())));
        }
        if let Some((i, w)) = weights.iter().enumerate().find(|(_, w)| !w.is_finite() || **w < 0.0) {
            return Err(Error::InvalidMeasure(format!("weight {i} is {w}")));
        }
        let total = crate::sum::compensated_sum(weights.iter().copied());
        if (total - 1.0).abs() > MASS_TOL {
            return Err(Error::InvalidMeasure(format!("total mass {total} is not 1")));
        }
        Ok(Self { carrier, weights })
    }

    pub fn uniform(carrier: Arc<PointCloud>) -> Result<Self> {
        let n = carrier.len();
        Self::new(carrier, vec![1.0 / n as f64; n])
    }

    pub fn carrier(&self) -> &Arc<PointCloud> {
        &self.carrier
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn total_mass(&self) -> f64 {
        crate::sum::compensated_sum(self.weights.iter().copied())
    }

    /// Mass of an index set.
    pub fn mass_of<'a>(&self, indices: impl IntoIterator<Item = &'a usize>) -> f64 {
        crate::sum::compensated_sum(indices.into_iter().map(|&i| self.weights[i]))
    }
}

/// One atom `(i, j, w)` of a joint measure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Entry {
    pub i: usize,
    pub j: usize,
    pub w: f64,
}

/// Sparse probability measure on `X x Y`.
///
/// Entries are kept sorted by `(i, j)` with no duplicate keys; every sum
/// over entries runs in that order.
#[derive(Debug, Clone)]
pub struct JointMeasure {
    carrier_x: Arc<PointCloud>,
    carrier_y: Arc<PointCloud>,
    entries: Vec<Entry>,
    row_start: Vec<usize>,
    empirical: bool,
}

impl JointMeasure {
    /// Builds a joint measure. Duplicate keys are merged by summation (with a
    /// warning) and zero weights dropped.
    pub fn new(
        carrier_x: Arc<PointCloud>,
        carrier_y: Arc<PointCloud>,
        entries: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<Self> {
        let mut raw: Vec<Entry> = Vec::new();
        for (i, j, w) in entries {
            carrier_x.check_index(i)?;
            carrier_y.check_index(j)?;
            if !w.is_finite() || w < 0.0 {
                return Err(Error::InvalidMeasure(format!("entry ({i}, {j}) has weight {w}")));
            }
            raw.push(Entry { i, j, w });
        }
        raw.sort_by_key(|e| (e.i, e.j));
        let mut entries: Vec<Entry> = Vec::with_capacity(raw.len());
        let mut duplicates = 0usize;
        for e in raw {
            match entries.last_mut() {
                Some(last) if last.i == e.i && last.j == e.j => {
                    last.w += e.w;
                    duplicates += 1;
                }
                _ => entries.push(e),
            }
        }
        if duplicates > 0 {
            warn!("merged {duplicates} duplicate (i, j) entries by summing their weights");
        }
        entries.retain(|e| e.w > 0.0);
        let total = crate::sum::compensated_sum(entries.iter().map(|e| e.w));
        if (total - 1.0).abs() > MASS_TOL {
            return Err(Error::InvalidMeasure(format!("total mass {total} is not 1")));
        }
        let mut row_start = vec![0usize; carrier_x.len() + 1];
        for e in &entries {
            row_start[e.i + 1] += 1;
        }
        for i in 0..carrier_x.len() {
            row_start[i + 1] += row_start[i];
        }
        Ok(Self { carrier_x, carrier_y, entries, row_start, empirical: false })
    }

    /// Product measure `mu (x) nu`.
    pub fn product(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<Self> {
        let entries = mu
            .weights()
            .iter()
            .enumerate()
            .flat_map(|(i, &a)| nu.weights().iter().enumerate().map(move |(j, &b)| (i, j, a * b)));
        Self::new(mu.carrier().clone(), nu.carrier().clone(), entries.collect::<Vec<_>>())
    }

    /// Marks the measure as an empirical sample (statistical tolerances apply).
    pub fn with_empirical(mut self, empirical: bool) -> Self {
        self.empirical = empirical;
        self
    }

    pub fn is_empirical(&self) -> bool {
        self.empirical
    }

    pub fn carrier_x(&self) -> &Arc<PointCloud> {
        &self.carrier_x
    }

    pub fn carrier_y(&self) -> &Arc<PointCloud> {
        &self.carrier_y
    }

    pub fn entries(&self) -> &[Entry] {
        &self.entries
    }

    /// Entries with first index `i`, sorted by `j`.
    pub fn row(&self, i: usize) -> &[Entry] {
        &self.entries[self.row_start[i]..self.row_start[i + 1]]
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        let row = self.row(i);
        row.binary_search_by_key(&j, |e| e.j).map_or(0.0, |k| row[k].w)
    }

    pub fn total_mass(&self) -> f64 {
        crate::sum::compensated_sum(self.entries.iter().map(|e| e.w))
    }

    /// The same measure on `Y x X`.
    pub fn transpose(&self) -> Self {
        let mut entries: Vec<Entry> = self.entries.iter().map(|e| Entry { i: e.j, j: e.i, w: e.w }).collect();
        entries.sort_by_key(|e| (e.i, e.j));
        let mut row_start = vec![0usize; self.carrier_y.len() + 1];
        for e in &entries {
            row_start[e.i + 1] += 1;
        }
        for i in 0..self.carrier_y.len() {
            row_start[i + 1] += row_start[i];
        }
        Self {
            carrier_x: self.carrier_y.clone(),
            carrier_y: self.carrier_x.clone(),
            entries,
            row_start,
            empirical: self.empirical,
        }
    }

    /// `zeta(C)`.
    pub fn measure_of(&self, set: &ProductSet) -> f64 {
        crate::sum::compensated_sum(self.entries.iter().filter(|e| set.contains(e.i, e.j)).map(|e| e.w))
    }
}

/// First marginal `mu(A) = zeta(A x Y)`.
pub fn marginal_x(zeta: &JointMeasure) -> DiscreteMeasure {
    let n = zeta.carrier_x.len();
    let weights = (0..n).map(|i| crate::sum::compensated_sum(zeta.row(i).iter().map(|e| e.w))).collect();
    DiscreteMeasure { carrier: zeta.carrier_x.clone(), weights }
}

/// Second marginal `nu(B) = zeta(X x B)`.
pub fn marginal_y(zeta: &JointMeasure) -> DiscreteMeasure {
    let mut acc = vec![CompensatedSum::new(); zeta.carrier_y.len()];
    for e in &zeta.entries {
        acc[e.j].add(e.w);
    }
    DiscreteMeasure { carrier: zeta.carrier_y.clone(), weights: acc.iter().map(CompensatedSum::value).collect() }
}

/// A subset of `X x Y`: a rectangle `A x B` or an explicit set of pairs.
#[derive(Debug, Clone, PartialEq)]
pub enum ProductSet {
    Rectangle { nx: usize, ny: usize, xs: BTreeSet<usize>, ys: BTreeSet<usize> },
    Pairs { nx: usize, ny: usize, pairs: BTreeSet<(usize, usize)> },
}

impl ProductSet {
    pub fn rectangle(
        nx: usize,
        ny: usize,
        xs: impl IntoIterator<Item = usize>,
        ys: impl IntoIterator<Item = usize>,
    ) -> Result<Self> {
        let xs: BTreeSet<usize> = xs.into_iter().collect();
        let ys: BTreeSet<usize> = ys.into_iter().collect();
        if let Some(&i) = xs.iter().find(|&&i| i >= nx) {
            return Err(Error::IndexOutOfRange { index: i, len: nx });
        }
        if let Some(&j) = ys.iter().find(|&&j| j >= ny) {
            return Err(Error::IndexOutOfRange { index: j, len: ny });
        }
        Ok(ProductSet::Rectangle { nx, ny, xs, ys })
    }

    pub fn pairs(nx: usize, ny: usize, pairs: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let pairs: BTreeSet<(usize, usize)> = pairs.into_iter().collect();
        for &(i, j) in &pairs {
            if i >= nx {
                return Err(Error::IndexOutOfRange { index: i, len: nx });
            }
            if j >= ny {
                return Err(Error::IndexOutOfRange { index: j, len: ny });
            }
        }
        Ok(ProductSet::Pairs { nx, ny, pairs })
    }

    pub fn dims(&self) -> (usize, usize) {
        match self {
            ProductSet::Rectangle { nx, ny, .. } | ProductSet::Pairs { nx, ny, .. } => (*nx, *ny),
        }
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        match self {
            ProductSet::Rectangle { xs, ys, .. } => xs.contains(&i) && ys.contains(&j),
            ProductSet::Pairs { pairs, .. } => pairs.contains(&(i, j)),
        }
    }

    /// The same set seen from `Y x X`.
    pub fn transpose(&self) -> Self {
        match self {
            ProductSet::Rectangle { nx, ny, xs, ys } => {
                ProductSet::Rectangle { nx: *ny, ny: *nx, xs: ys.clone(), ys: xs.clone() }
            }
            ProductSet::Pairs { nx, ny, pairs } => {
                ProductSet::Pairs { nx: *ny, ny: *nx, pairs: pairs.iter().map(|&(i, j)| (j, i)).collect() }
            }
        }
    }
}

/// `C_x = {j : (i, j) in C}`.
pub fn slice_x(set: &ProductSet, i: usize) -> Result<BTreeSet<usize>> {
    let (nx, _) = set.dims();
    if i >= nx {
        return Err(Error::IndexOutOfRange { index: i, len: nx });
    }
    Ok(match set {
        ProductSet::Rectangle { xs, ys, .. } => {
            if xs.contains(&i) {
                ys.clone()
            } else {
                BTreeSet::new()
            }
        }
        ProductSet::Pairs { pairs, .. } => pairs.range((i, 0)..=(i, usize::MAX)).map(|&(_, j)| j).collect(),
    })
}

/// `C_y = {i : (i, j) in C}`.
pub fn slice_y(set: &ProductSet, j: usize) -> Result<BTreeSet<usize>> {
    slice_x(&set.transpose(), j)
}

/// A support pair handed to integrands.
#[derive(Debug, Clone, Copy)]
pub struct PairPoint<'a> {
    pub i: usize,
    pub j: usize,
    pub x: &'a [f64],
    pub y: &'a [f64],
}

/// An extended-real function on `X x Y` evaluated at support pairs.
pub trait PairFunction: Sync {
    fn eval(&self, at: PairPoint<'_>) -> f64;
}

impl<F> PairFunction for F
where
    F: Fn(PairPoint<'_>) -> f64 + Sync,
{
    fn eval(&self, at: PairPoint<'_>) -> f64 {
        self(at)
    }
}

/// Evaluates `f` at support entry `(i, j)` of `zeta`, rejecting NaN.
pub(crate) fn eval_at<F: PairFunction + ?Sized>(f: &F, zeta: &JointMeasure, i: usize, j: usize) -> Result<f64> {
    let v = f.eval(PairPoint { i, j, x: zeta.carrier_x.point(i), y: zeta.carrier_y.point(j) });
    if v.is_nan() {
        Err(Error::UndefinedIntegrand { i, j })
    } else {
        Ok(v)
    }
}

/// `sum_{(i,j)} f(x_i, y_j) w_ij` over the support, in `(i, j)` order.
pub fn integrate<F: PairFunction + ?Sized>(f: &F, zeta: &JointMeasure) -> Result<f64> {
    let mut acc = CompensatedSum::new();
    for e in &zeta.entries {
        acc.add(eval_at(f, zeta, e.i, e.j)? * e.w);
    }
    if acc.is_undefined() {
        return Err(Error::UndefinedSum);
    }
    Ok(acc.value())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_by_two() -> JointMeasure {
        let cx = Arc::new(PointCloud::line(&[0.0, 1.0]).unwrap());
        let cy = Arc::new(PointCloud::line(&[0.0, 1.0]).unwrap());
        JointMeasure::new(cx, cy, [(0, 0, 0.2), (0, 1, 0.3), (1, 0, 0.5)]).unwrap()
    }

    #[test]
    fn marginals_of_small_table() {
        let z = two_by_two();
        assert_eq!(marginal_x(&z).weights(), &[0.5, 0.5]);
        assert_eq!(marginal_y(&z).weights(), &[0.7, 0.3]);
    }

    #[test]
    fn marginals_of_product() {
        let c = Arc::new(PointCloud::line(&[0.0, 0.5, 1.0]).unwrap());
        let mu = DiscreteMeasure::new(c.clone(), vec![0.25, 0.25, 0.5]).unwrap();
        let nu = DiscreteMeasure::new(c, vec![0.125, 0.375, 0.5]).unwrap();
        let z = JointMeasure::product(&mu, &nu).unwrap();
        assert_eq!(marginal_x(&z).weights(), mu.weights());
        assert_eq!(marginal_y(&z).weights(), nu.weights());
    }

    #[test]
    fn diagonal_marginals_are_uniform() {
        let n = 8;
        let c = Arc::new(PointCloud::line(&(0..n).map(|i| i as f64).collect::<Vec<_>>()).unwrap());
        let z = JointMeasure::new(c.clone(), c, (0..n).map(|i| (i, i, 1.0 / n as f64))).unwrap();
        assert!(marginal_x(&z).weights().iter().all(|&w| w == 0.125));
        assert!(marginal_y(&z).weights().iter().all(|&w| w == 0.125));
    }

    #[test]
    fn duplicates_merge_and_validation() {
        let c = Arc::new(PointCloud::line(&[0.0, 1.0]).unwrap());
        let z = JointMeasure::new(c.clone(), c.clone(), [(0, 0, 0.25), (1, 1, 0.5), (0, 0, 0.25)]).unwrap();
        assert_eq!(z.entries().len(), 2);
        assert_eq!(z.weight(0, 0), 0.5);
        assert!(JointMeasure::new(c.clone(), c.clone(), [(0, 0, 0.5)]).is_err());
        assert!(JointMeasure::new(c.clone(), c.clone(), [(0, 0, 1.5), (1, 1, -0.5)]).is_err());
        assert!(matches!(
            JointMeasure::new(c.clone(), c, [(2, 0, 1.0)]),
            Err(Error::IndexOutOfRange { index: 2, len: 2 })
        ));
    }

    #[test]
    fn cloud_validation() {
        assert!(PointCloud::new(vec![vec![0.0], vec![1.0, 2.0]], Metric::Euclidean).is_err());
        assert!(PointCloud::new(vec![vec![0.0, 1.0]], Metric::AbsoluteDifference).is_err());
        assert!(PointCloud::new(vec![vec![f64::NAN]], Metric::Euclidean).is_err());
        let c = PointCloud::new(vec![vec![0.0, 0.0], vec![3.0, 4.0], vec![1.0, 0.0]], Metric::Euclidean).unwrap();
        assert_eq!(c.diameter(), 5.0);
        assert_eq!(c.min_separation(), 1.0);
        for i in 0..3 {
            assert_eq!(c.distance(i, i), 0.0);
            for j in 0..3 {
                assert_eq!(c.distance(i, j), c.distance(j, i));
            }
        }
    }

    #[test]
    fn slices() {
        let rect = ProductSet::rectangle(3, 3, [0, 2], [1, 2]).unwrap();
        assert_eq!(slice_x(&rect, 0).unwrap(), BTreeSet::from([1, 2]));
        assert!(slice_x(&rect, 1).unwrap().is_empty());
        let diag = ProductSet::pairs(3, 3, (0..3).map(|i| (i, i))).unwrap();
        assert_eq!(slice_x(&diag, 1).unwrap(), BTreeSet::from([1]));
        assert_eq!(slice_y(&rect, 2).unwrap(), BTreeSet::from([0, 2]));
        assert!(matches!(slice_x(&diag, 3), Err(Error::IndexOutOfRange { .. })));
        assert!(ProductSet::rectangle(2, 2, [2], [0]).is_err());
    }

    #[test]
    fn integrate_basics() {
        let z = two_by_two();
        assert!((integrate(&|_: PairPoint| 1.0, &z).unwrap() - 1.0).abs() < 1e-15);
        let c = ProductSet::pairs(2, 2, [(0, 1), (1, 0)]).unwrap();
        let ind = |p: PairPoint| if c.contains(p.i, p.j) { 1.0 } else { 0.0 };
        assert_eq!(integrate(&ind, &z).unwrap(), z.measure_of(&c));
        assert!(matches!(
            integrate(&|p: PairPoint| if p.i == 1 { f64::NAN } else { 0.0 }, &z),
            Err(Error::UndefinedIntegrand { i: 1, j: 0 })
        ));
        assert_eq!(integrate(&|p: PairPoint| if p.i == 1 { f64::INFINITY } else { 0.0 }, &z).unwrap(), f64::INFINITY);
        assert!(matches!(
            integrate(&|p: PairPoint| if p.i == 1 { f64::INFINITY } else { f64::NEG_INFINITY }, &z),
            Err(Error::UndefinedSum)
        ));
    }

    #[test]
    fn diagonal_xy_moment() {
        // Direct summation oracle for the n-atom diagonal on [0, 1).
        for n in [10usize, 100, 1000] {
            let xs: Vec<f64> = (0..n).map(|i| i as f64 / n as f64).collect();
            let c = Arc::new(PointCloud::line(&xs).unwrap());
            let z = JointMeasure::new(c.clone(), c, (0..n).map(|i| (i, i, 1.0 / n as f64))).unwrap();
            let got = integrate(&|p: PairPoint| p.x[0] * p.y[0], &z).unwrap();
            let oracle: f64 = xs.iter().map(|x| x * x / n as f64).sum();
            assert!((got - oracle).abs() < 1e-13, "n={n}: {got} vs {oracle}");
        }
        let n = 1000;
        let oracle: f64 = (0..n).map(|i| (i as f64 / n as f64).powi(2) / n as f64).sum();
        assert!((oracle - 1.0 / 3.0).abs() < 1e-3);
    }

    #[test]
    fn transpose_swaps() {
        let z = two_by_two();
        let t = z.transpose();
        assert_eq!(t.weight(1, 0), 0.3);
        assert_eq!(t.weight(0, 1), 0.5);
        assert_eq!(marginal_x(&t).weights(), marginal_y(&z).weights());
    }
}
