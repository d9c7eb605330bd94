//! Transportation simplex on a dense cost table.
//!
//! Infinite cells are priced lexicographically: a cell costs `(1, 0)` when
//! `c = +inf` and `(0, c)` otherwise, so the first phase minimizes mass on
//! forbidden cells and the second the finite cost. Entering cells follow
//! Bland's rule (first improving cell in row-major order), leaving cells the
//! smallest index among ties.

use std::collections::VecDeque;

use log::debug;
use serde::Serialize;

use super::cost::{CostFunction, CostMatrix};
use super::plan::TransferencePlan;
use super::prices::PricePair;
use crate::error::{Error, Result};
use crate::measure::{DiscreteMeasure, JointMeasure};
use crate::sum::CompensatedSum;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
struct Lex {
    inf: f64,
    fin: f64,
}

impl Lex {
    fn of(c: f64) -> Self {
        if c == f64::INFINITY {
            Lex { inf: 1.0, fin: 0.0 }
        } else {
            Lex { inf: 0.0, fin: c }
        }
    }

    fn sub(self, o: Lex) -> Lex {
        Lex { inf: self.inf - o.inf, fin: self.fin - o.fin }
    }

    fn add(self, o: Lex) -> Lex {
        Lex { inf: self.inf + o.inf, fin: self.fin + o.fin }
    }

    fn is_negative(self, eps: f64) -> bool {
        self.inf < -0.5 || (self.inf.abs() < 0.5 && self.fin < -eps)
    }
}

/// Optimal plan together with the dual prices certifying it.
#[derive(Debug, Clone, Serialize)]
pub struct SolvedPlan {
    pub plan: TransferencePlan,
    pub prices: PricePair,
    pub cost: f64,
    pub iterations: usize,
    /// Largest `|psi + c - phi|` over cells carrying mass.
    pub slackness_residual: f64,
    /// Largest `phi - psi - c` over finite cells (0 when competitive).
    pub competitive_residual: f64,
}

struct Tableau {
    n: usize,
    m: usize,
    cost: Vec<Lex>,
    flow: Vec<f64>,
    basic: Vec<bool>,
}

impl Tableau {
    fn idx(&self, i: usize, j: usize) -> usize {
        i * self.m + j
    }

    fn northwest(n: usize, m: usize, supply: &[f64], demand: &[f64], cost: Vec<Lex>) -> Self {
        let mut t = Tableau { n, m, cost, flow: vec![0.0; n * m], basic: vec![false; n * m] };
        let (mut s, mut d) = (supply.to_vec(), demand.to_vec());
        let (mut i, mut j) = (0, 0);
        loop {
            let q = s[i].min(d[j]).max(0.0);
            let k = t.idx(i, j);
            t.flow[k] = q;
            t.basic[k] = true;
            s[i] -= q;
            d[j] -= q;
            if i == n - 1 && j == m - 1 {
                break;
            }
            if i == n - 1 {
                j += 1;
            } else if j == m - 1 || s[i] <= d[j] {
                i += 1;
            } else {
                j += 1;
            }
        }
        t
    }

    /// Nodes `0..n` are rows, `n..n+m` columns; edges are basic cells.
    fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n + self.m];
        for i in 0..self.n {
            for j in 0..self.m {
                if self.basic[self.idx(i, j)] {
                    adj[i].push(self.n + j);
                    adj[self.n + j].push(i);
                }
            }
        }
        adj
    }

    fn duals(&self) -> (Vec<Lex>, Vec<Lex>) {
        let adj = self.adjacency();
        let mut pot: Vec<Option<Lex>> = vec![None; self.n + self.m];
        pot[0] = Some(Lex::default());
        let mut queue = VecDeque::from([0usize]);
        while let Some(a) = queue.pop_front() {
            let pa = pot[a].expect("visited");
            for &b in &adj[a] {
                if pot[b].is_none() {
                    let (i, j) = if a < self.n { (a, b - self.n) } else { (b, a - self.n) };
                    pot[b] = Some(self.cost[self.idx(i, j)].sub(pa));
                    queue.push_back(b);
                }
            }
        }
        let pot: Vec<Lex> = pot.into_iter().map(|p| p.expect("basis spans all rows and columns")).collect();
        (pot[..self.n].to_vec(), pot[self.n..].to_vec())
    }

    /// Basic cells on the tree path from row `i` to column `j`, in order.
    fn path(&self, i: usize, j: usize) -> Vec<(usize, usize)> {
        let adj = self.adjacency();
        let target = self.n + j;
        let mut parent = vec![usize::MAX; self.n + self.m];
        parent[i] = i;
        let mut queue = VecDeque::from([i]);
        while let Some(a) = queue.pop_front() {
            if a == target {
                break;
            }
            for &b in &adj[a] {
                if parent[b] == usize::MAX {
                    parent[b] = a;
                    queue.push_back(b);
                }
            }
        }
        let mut cells = Vec::new();
        let mut b = target;
        while b != i {
            let a = parent[b];
            cells.push(if a < self.n { (a, b - self.n) } else { (b, a - self.n) });
            b = a;
        }
        cells.reverse();
        cells
    }
}

/// Solves `min sum c pi` over plans with marginals `mu`, `nu`.
pub fn solve_plan(mu: &DiscreteMeasure, nu: &DiscreteMeasure, c: &CostFunction) -> Result<SolvedPlan> {
    let matrix = c.matrix(mu.carrier(), nu.carrier())?;
    solve_plan_with(mu, nu, &matrix)
}

#[allow(clippy::needless_range_loop)]
pub fn solve_plan_with(mu: &DiscreteMeasure, nu: &DiscreteMeasure, c: &CostMatrix) -> Result<SolvedPlan> {
    let (n, m) = (mu.weights().len(), nu.weights().len());
    if c.rows() != n || c.cols() != m {
        return Err(Error::InvalidCost(format!("cost is {} x {}, marginals {n} x {m}", c.rows(), c.cols())));
    }
    if n == 0 || m == 0 {
        return Err(Error::Infeasible("empty carrier".into()));
    }
    let cost: Vec<Lex> = (0..n).flat_map(|i| (0..m).map(move |j| (i, j))).map(|(i, j)| Lex::of(c.get(i, j))).collect();
    let scale = cost.iter().map(|l| l.fin.abs()).fold(1.0, f64::max);
    let eps = 1e-12 * scale;
    let mut t = Tableau::northwest(n, m, mu.weights(), nu.weights(), cost);

    let max_iter = 50 * (n * m).pow(2) + 1000;
    let mut iterations = 0;
    loop {
        let (u, v) = t.duals();
        let entering = (0..n).flat_map(|i| (0..m).map(move |j| (i, j))).find(|&(i, j)| {
            let k = t.idx(i, j);
            !t.basic[k] && t.cost[k].sub(u[i]).sub(v[j]).is_negative(eps)
        });
        let Some((ei, ej)) = entering else { break };
        iterations += 1;
        if iterations > max_iter {
            return Err(Error::Infeasible(format!("simplex did not terminate in {max_iter} pivots")));
        }
        let path = t.path(ei, ej);
        // Path cells alternate -, +, -, ... starting from row `ei`.
        let minus: Vec<(usize, usize)> = path.iter().step_by(2).copied().collect();
        let theta = minus.iter().map(|&(i, j)| t.flow[t.idx(i, j)]).fold(f64::INFINITY, f64::min);
        let leaving =
            minus.iter().copied().filter(|&(i, j)| t.flow[t.idx(i, j)] == theta).min().expect("nonempty cycle");
        for (s, &(i, j)) in path.iter().enumerate() {
            let k = t.idx(i, j);
            if s % 2 == 0 {
                t.flow[k] = (t.flow[k] - theta).max(0.0);
            } else {
                t.flow[k] += theta;
            }
        }
        let ek = t.idx(ei, ej);
        t.flow[ek] = theta;
        t.basic[ek] = true;
        let lk = t.idx(leaving.0, leaving.1);
        t.basic[lk] = false;
        t.flow[lk] = 0.0;
    }
    debug!("transport simplex: {iterations} pivots on {n} x {m}");

    for i in 0..n {
        for j in 0..m {
            let k = t.idx(i, j);
            if t.cost[k].inf > 0.5 && t.flow[k] > 1e-14 {
                return Err(Error::Infeasible(format!(
                    "every plan puts mass on infinite-cost cells (cell ({i}, {j}) carries {})",
                    t.flow[k]
                )));
            }
        }
    }

    let (u, v) = t.duals();
    let mut shift: f64 = 0.0;
    for i in 0..n {
        for j in 0..m {
            let k = t.idx(i, j);
            if t.cost[k].inf > 0.5 {
                continue;
            }
            let r = t.cost[k].sub(u[i].add(v[j]));
            if r.inf > 0.5 {
                shift = shift.max(-r.fin / r.inf);
            }
        }
    }
    let psi: Vec<f64> = u.iter().map(|l| 0.0 - (l.fin + shift * l.inf)).collect();
    let phi: Vec<f64> = v.iter().map(|l| l.fin + shift * l.inf + 0.0).collect();

    let mut entries = Vec::new();
    let mut total = CompensatedSum::new();
    let mut slackness: f64 = 0.0;
    let mut competitive: f64 = 0.0;
    for i in 0..n {
        for j in 0..m {
            let k = t.idx(i, j);
            let cij = c.get(i, j);
            if cij.is_finite() {
                competitive = competitive.max(phi[j] - psi[i] - cij);
            }
            if t.flow[k] > 0.0 && cij.is_finite() {
                entries.push((i, j, t.flow[k]));
                total.add(t.flow[k] * cij);
                slackness = slackness.max((psi[i] + cij - phi[j]).abs());
            }
        }
    }
    let joint = JointMeasure::new(mu.carrier().clone(), nu.carrier().clone(), entries)?;
    Ok(SolvedPlan {
        plan: TransferencePlan::new(joint, mu.clone(), nu.clone())?,
        prices: PricePair::new(psi, phi)?,
        cost: total.value(),
        iterations,
        slackness_residual: slackness,
        competitive_residual: competitive.max(0.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::PointCloud;
    use std::sync::Arc;

    fn uniform(xs: &[f64]) -> DiscreteMeasure {
        DiscreteMeasure::uniform(Arc::new(PointCloud::line(xs).unwrap())).unwrap()
    }

    #[test]
    fn zero_cost_matching() {
        let mu = uniform(&[0.0, 1.0]);
        let s = solve_plan(&mu, &mu, &CostFunction::Distance).unwrap();
        assert_eq!(s.cost, 0.0);
        assert_eq!(s.plan.plan().weight(0, 0), 0.5);
        assert_eq!(s.plan.plan().weight(1, 1), 0.5);
    }

    #[test]
    fn forced_plan() {
        let c = Arc::new(PointCloud::line(&[0.0, 1.0]).unwrap());
        let mu = DiscreteMeasure::new(c.clone(), vec![1.0, 0.0]).unwrap();
        let nu = DiscreteMeasure::new(c, vec![0.0, 1.0]).unwrap();
        let s = solve_plan(&mu, &nu, &CostFunction::Distance).unwrap();
        assert_eq!(s.plan.plan().entries().len(), 1);
        assert_eq!(s.cost, 1.0);
    }

    /// Brute force over the six permutation matrices, which are the extreme
    /// points of the uniform 3 x 3 plans.
    #[test]
    fn three_by_three_against_permutations() {
        let table = vec![vec![0.0, 1.0, 2.0], vec![1.0, 0.0, 1.0], vec![2.0, 1.0, 0.0]];
        let mu = uniform(&[0.0, 1.0, 2.0]);
        let s = solve_plan(&mu, &mu, &CostFunction::Table { table: table.clone() }).unwrap();
        let perms = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
        let best =
            perms.iter().map(|p| (0..3).map(|i| table[i][p[i]] / 3.0).sum::<f64>()).fold(f64::INFINITY, f64::min);
        assert_eq!(best, 0.0);
        assert!((s.cost - best).abs() < 1e-15);
        assert!(s.slackness_residual < 1e-12);
        assert_eq!(s.competitive_residual, 0.0);
    }

    #[test]
    fn infinite_cells_are_avoided() {
        let mu = uniform(&[0.0, 1.0]);
        let table = vec![vec![f64::INFINITY, 5.0], vec![1.0, f64::INFINITY]];
        let s = solve_plan(&mu, &mu, &CostFunction::Table { table }).unwrap();
        assert_eq!(s.cost, 3.0);
        assert!(s.slackness_residual < 1e-12);
        assert_eq!(s.competitive_residual, 0.0);
    }

    #[test]
    fn infeasible_when_all_blocked() {
        let c = Arc::new(PointCloud::line(&[0.0, 1.0]).unwrap());
        let mu = DiscreteMeasure::new(c.clone(), vec![1.0, 0.0]).unwrap();
        let table = vec![vec![f64::INFINITY, f64::INFINITY], vec![0.0, 0.0]];
        assert!(matches!(solve_plan(&mu, &mu, &CostFunction::Table { table }), Err(Error::Infeasible(_))));
    }
}
