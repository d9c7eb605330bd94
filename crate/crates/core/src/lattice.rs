//! The countable generator family (open balls with rational radii and
//! complements of closed balls, centered at carrier points) and the lattice
//! of finite unions of finite intersections of generators.
//!
//! A [`LatticeSet`] is kept in disjunctive normal form: a point belongs to
//! the set iff it lies inside every generator of at least one clause.

use std::cmp::Ordering;
use std::collections::BTreeSet;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::PointCloud;
use crate::metric::Radius;

pub const DEFAULT_CLAUSE_BUDGET: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GeneratorKind {
    /// `B_r(c) = {y : d(y, c) < r}`
    #[serde(rename = "open")]
    OpenBall,
    /// `Y \ closed B_r(c) = {y : d(y, c) > r}`
    #[serde(rename = "cocball")]
    ClosedBallComplement,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Generator {
    pub center: usize,
    pub radius: Radius,
    pub kind: GeneratorKind,
}

impl Generator {
    pub fn open_ball(center: usize, radius: Radius) -> Self {
        Self { center, radius, kind: GeneratorKind::OpenBall }
    }

    pub fn closed_ball_complement(center: usize, radius: Radius) -> Self {
        Self { center, radius, kind: GeneratorKind::ClosedBallComplement }
    }

    pub fn contains_point(&self, cloud: &PointCloud, y: &[f64]) -> bool {
        let ord = cloud.metric().compare(y, cloud.point(self.center), &self.radius);
        match self.kind {
            GeneratorKind::OpenBall => ord == Ordering::Less,
            GeneratorKind::ClosedBallComplement => ord == Ordering::Greater,
        }
    }
}

/// A finite union of finite intersections of generators. No clauses is the
/// empty set; an empty clause is the whole space.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct LatticeSet {
    pub clauses: Vec<Vec<Generator>>,
}

impl LatticeSet {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn from_generator(g: Generator) -> Self {
        Self { clauses: vec![vec![g]] }
    }

    pub fn ball(center: usize, radius: Radius) -> Self {
        Self::from_generator(Generator::open_ball(center, radius))
    }

    pub fn closed_ball_complement(center: usize, radius: Radius) -> Self {
        Self::from_generator(Generator::closed_ball_complement(center, radius))
    }

    /// One open ball strictly larger than the carrier's diameter.
    pub fn whole(cloud: &PointCloud) -> Self {
        let r = Radius::dyadic_ceil(cloud.diameter() + 1.0, 0).expect("positive radius");
        Self::ball(0, r)
    }

    /// `B_r(c) \ closed B_{alpha r}(c)` for `0 < alpha < 1`.
    pub fn ball_minus_closed_ball(center: usize, radius: Radius, alpha: Ratio<i128>) -> Result<Self> {
        if alpha <= Ratio::from_integer(0) || alpha >= Ratio::from_integer(1) {
            return Err(Error::InvalidAlpha(alpha.to_string()));
        }
        let inner = radius.scaled(alpha)?;
        Ok(Self {
            clauses: vec![vec![Generator::open_ball(center, radius), Generator::closed_ball_complement(center, inner)]],
        })
    }

    pub fn is_syntactically_empty(&self) -> bool {
        self.clauses.is_empty()
    }

    pub fn validate(&self, cloud: &PointCloud) -> Result<()> {
        for g in self.clauses.iter().flatten() {
            cloud.check_index(g.center)?;
        }
        Ok(())
    }

    pub fn contains_point(&self, cloud: &PointCloud, y: &[f64]) -> bool {
        self.clauses.iter().any(|clause| clause.iter().all(|g| g.contains_point(cloud, y)))
    }

    /// Membership of carrier point `j`.
    pub fn contains(&self, cloud: &PointCloud, j: usize) -> bool {
        self.contains_point(cloud, cloud.point(j))
    }

    /// Carrier points inside the set.
    pub fn members(&self, cloud: &PointCloud) -> BTreeSet<usize> {
        (0..cloud.len()).filter(|&j| self.contains(cloud, j)).collect()
    }

    pub fn union(&self, other: &Self) -> Result<Self> {
        self.union_with_budget(other, DEFAULT_CLAUSE_BUDGET)
    }

    pub fn union_with_budget(&self, other: &Self, budget: usize) -> Result<Self> {
        let clauses = self.clauses.len() + other.clauses.len();
        if clauses > budget {
            return Err(Error::LatticeBudgetExceeded { clauses, budget });
        }
        let mut out = self.clauses.clone();
        out.extend(other.clauses.iter().cloned());
        Ok(Self { clauses: out })
    }

    pub fn intersect(&self, other: &Self) -> Result<Self> {
        self.intersect_with_budget(other, DEFAULT_CLAUSE_BUDGET)
    }

    /// DNF product: every clause of `self` joined with every clause of `other`.
    pub fn intersect_with_budget(&self, other: &Self, budget: usize) -> Result<Self> {
        let clauses = self.clauses.len() * other.clauses.len();
        if clauses > budget {
            return Err(Error::LatticeBudgetExceeded { clauses, budget });
        }
        let mut out = Vec::with_capacity(clauses);
        for a in &self.clauses {
            for b in &other.clauses {
                let mut c = a.clone();
                for g in b {
                    if !c.contains(g) {
                        c.push(*g);
                    }
                }
                out.push(c);
            }
        }
        Ok(Self { clauses: out })
    }

    /// `self \ closed B_r(c)`.
    pub fn minus_closed_ball(&self, center: usize, radius: Radius) -> Result<Self> {
        self.intersect(&Self::closed_ball_complement(center, radius))
    }
}
