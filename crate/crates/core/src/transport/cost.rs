use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::PointCloud;

/// `c : X x Y -> R u {+inf}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CostFunction {
    #[serde(rename = "sqdist")]
    SquaredDistance,
    #[serde(rename = "dist")]
    Distance,
    Table {
        #[serde(with = "super::ext::matrix")]
        table: Vec<Vec<f64>>,
    },
}

impl CostFunction {
    /// Tabulates the cost on `cx x cy`. Distance costs need both carriers in
    /// one space and use the metric of `cx`.
    pub fn matrix(&self, cx: &PointCloud, cy: &PointCloud) -> Result<CostMatrix> {
        let (n, m) = (cx.len(), cy.len());
        let values = match self {
            CostFunction::Table { table } => {
                if table.len() != n || table.iter().any(|r| r.len() != m) {
                    return Err(Error::InvalidCost(format!("cost table must be {n} x {m}")));
                }
                table.iter().flatten().copied().collect()
            }
            CostFunction::SquaredDistance | CostFunction::Distance => {
                if cx.dim() != cy.dim() {
                    return Err(Error::InvalidCost(format!(
                        "distance cost needs equal dimensions, got {} and {}",
                        cx.dim(),
                        cy.dim()
                    )));
                }
                let metric = cx.metric();
                let square = matches!(self, CostFunction::SquaredDistance);
                let mut v = Vec::with_capacity(n * m);
                for i in 0..n {
                    for j in 0..m {
                        let d = metric.distance(cx.point(i), cy.point(j));
                        v.push(if square { d * d } else { d });
                    }
                }
                v
            }
        };
        CostMatrix::new(n, m, values)
    }
}

/// Row-major table of costs.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl CostMatrix {
    pub fn new(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != rows * cols {
            return Err(Error::InvalidCost(format!("expected {} values, got {}", rows * cols, values.len())));
        }
        if let Some(v) = values.iter().find(|v| v.is_nan() || **v == f64::NEG_INFINITY) {
            return Err(Error::InvalidCost(format!("cost value {v} not in R u {{+inf}}")));
        }
        Ok(Self { rows, cols, values })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::InvalidCost("ragged cost table".into()));
        }
        Self::new(rows.len(), cols, rows.iter().flatten().copied().collect())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.cols + j]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.values.chunks(self.cols.max(1)).take(self.rows).map(<[f64]>::to_vec).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn distance_tables() {
        let c = PointCloud::line(&[0.0, 1.0, 3.0]).unwrap();
        let d = CostFunction::Distance.matrix(&c, &c).unwrap();
        let s = CostFunction::SquaredDistance.matrix(&c, &c).unwrap();
        assert_eq!(d.get(0, 2), 3.0);
        assert_eq!(s.get(2, 1), 4.0);
        assert_eq!(s.get(1, 1), 0.0);
    }

    #[test]
    fn rejects_bad_values() {
        assert!(CostMatrix::new(1, 2, vec![0.0, f64::NEG_INFINITY]).is_err());
        assert!(CostMatrix::new(1, 2, vec![0.0, f64::NAN]).is_err());
        assert!(CostMatrix::new(1, 2, vec![0.0, f64::INFINITY]).is_ok());
        let c = PointCloud::line(&[0.0]).unwrap();
        assert!(CostFunction::Table { table: vec![vec![1.0, 2.0]] }.matrix(&c, &c).is_err());
    }

    #[test]
    fn json_round_trip() {
        let c = CostFunction::Table { table: vec![vec![0.0, f64::INFINITY]] };
        let s = serde_json::to_string(&c).unwrap();
        assert_eq!(s, r#"{"kind":"table","table":[[0.0,"inf"]]}"#);
        assert_eq!(serde_json::from_str::<CostFunction>(&s).unwrap(), c);
        assert_eq!(
            serde_json::from_str::<CostFunction>(r#"{"kind":"sqdist"}"#).unwrap(),
            CostFunction::SquaredDistance
        );
    }
}
