//! File formats: joint measures (JSON or sampled pairs in CSV), transport
//! instances and integrand specifications.

use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::{DiscreteMeasure, JointMeasure, PairFunction, PairPoint, PointCloud};
use crate::metric::Metric;
use crate::transport::ext::Ext;
use crate::transport::{CostFunction, CostMatrix, PricePair, TransferencePlan};

fn default_metric() -> Metric {
    Metric::Euclidean
}

/// `{"points_x": [[..]], "points_y": [[..]], "metric": "..", "entries": [[i, j, w], ..]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureFile {
    pub points_x: Vec<Vec<f64>>,
    pub points_y: Vec<Vec<f64>>,
    #[serde(default = "default_metric")]
    pub metric: Metric,
    pub entries: Vec<(usize, usize, f64)>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub empirical: bool,
}

impl MeasureFile {
    pub fn into_joint(self) -> Result<JointMeasure> {
        let cx = Arc::new(PointCloud::new(self.points_x, self.metric)?);
        let cy = Arc::new(PointCloud::new(self.points_y, self.metric)?);
        Ok(JointMeasure::new(cx, cy, self.entries)?.with_empirical(self.empirical))
    }

    pub fn from_joint(zeta: &JointMeasure) -> Self {
        Self {
            points_x: zeta.carrier_x().points().map(<[f64]>::to_vec).collect(),
            points_y: zeta.carrier_y().points().map(<[f64]>::to_vec).collect(),
            metric: zeta.carrier_x().metric(),
            entries: zeta.entries().iter().map(|e| (e.i, e.j, e.w)).collect(),
            empirical: zeta.is_empirical(),
        }
    }
}

pub fn parse_measure(json: &str) -> Result<JointMeasure> {
    serde_json::from_str::<MeasureFile>(json)?.into_joint()
}

pub fn read_measure(path: impl AsRef<Path>) -> Result<JointMeasure> {
    parse_measure(&std::fs::read_to_string(path)?)
}

pub fn measure_to_json(zeta: &JointMeasure) -> Result<String> {
    Ok(serde_json::to_string_pretty(&MeasureFile::from_joint(zeta))?)
}

/// Rows `x_1,..,x_d,y_1,..,y_e`, each sample an atom of weight `1/n`. A
/// first row that does not parse as numbers is taken as a header.
pub fn pairs_from_csv<R: Read>(reader: R, x_dim: usize, metric: Metric) -> Result<JointMeasure> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(reader);
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let values: std::result::Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
        let values = match values {
            Ok(v) => v,
            Err(_) if row == 0 => continue,
            Err(e) => return Err(Error::InvalidCloud(format!("row {row}: {e}"))),
        };
        if values.len() <= x_dim || x_dim == 0 {
            return Err(Error::InvalidCloud(format!(
                "row {row} has {} columns, need x_dim = {x_dim} and at least one y column",
                values.len()
            )));
        }
        xs.push(values[..x_dim].to_vec());
        ys.push(values[x_dim..].to_vec());
    }
    let n = xs.len();
    if n == 0 {
        return Err(Error::InvalidCloud("no samples".into()));
    }
    let cx = Arc::new(PointCloud::new(xs, metric)?);
    let cy = Arc::new(PointCloud::new(ys, metric)?);
    let w = 1.0 / n as f64;
    // 1/n need not sum to 1 exactly; the last atom absorbs the rounding.
    let last = 1.0 - w * (n - 1) as f64;
    Ok(JointMeasure::new(cx, cy, (0..n).map(|k| (k, k, if k + 1 == n { last } else { w })))?.with_empirical(true))
}

pub fn read_pairs_csv(path: impl AsRef<Path>, x_dim: usize, metric: Metric) -> Result<JointMeasure> {
    pairs_from_csv(std::fs::File::open(path)?, x_dim, metric)
}

/// `{"mu": [..], "nu": [..], "cost": {"kind": ..}, "plan"?, "psi"?, "phi"?}`.
/// Carriers default to `0, 1, 2, ..` on the line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OtFile {
    pub mu: Vec<f64>,
    pub nu: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points_x: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points_y: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metric: Option<Metric>,
    pub cost: CostFunction,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plan: Option<Vec<(usize, usize, f64)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub psi: Option<Vec<Ext>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi: Option<Vec<Ext>>,
}

#[derive(Debug, Clone)]
pub struct OtInstance {
    pub mu: DiscreteMeasure,
    pub nu: DiscreteMeasure,
    pub cost: CostFunction,
    pub matrix: CostMatrix,
    pub plan: Option<TransferencePlan>,
    pub prices: Option<PricePair>,
}

fn carrier(points: Option<Vec<Vec<f64>>>, n: usize, metric: Option<Metric>) -> Result<Arc<PointCloud>> {
    let cloud = match points {
        Some(p) => {
            if p.len() != n {
                return Err(Error::InvalidCloud(format!("{} points for {n} weights", p.len())));
            }
            PointCloud::new(p, metric.unwrap_or(Metric::Euclidean))?
        }
        None => {
            PointCloud::new((0..n).map(|k| vec![k as f64]).collect(), metric.unwrap_or(Metric::AbsoluteDifference))?
        }
    };
    Ok(Arc::new(cloud))
}

impl OtFile {
    pub fn into_instance(self) -> Result<OtInstance> {
        let cx = carrier(self.points_x, self.mu.len(), self.metric)?;
        let cy = carrier(self.points_y, self.nu.len(), self.metric)?;
        let mu = DiscreteMeasure::new(cx.clone(), self.mu)?;
        let nu = DiscreteMeasure::new(cy.clone(), self.nu)?;
        let matrix = self.cost.matrix(&cx, &cy)?;
        let plan = match self.plan {
            Some(entries) => Some(TransferencePlan::new(JointMeasure::new(cx, cy, entries)?, mu.clone(), nu.clone())?),
            None => None,
        };
        let prices = match (self.psi, self.phi) {
            (Some(psi), Some(phi)) => {
                Some(PricePair::new(psi.into_iter().map(|e| e.0).collect(), phi.into_iter().map(|e| e.0).collect())?)
            }
            (None, None) => None,
            _ => return Err(Error::InvalidMeasure("psi and phi must be given together".into())),
        };
        Ok(OtInstance { mu, nu, cost: self.cost, matrix, plan, prices })
    }
}

pub fn parse_ot_instance(json: &str) -> Result<OtInstance> {
    serde_json::from_str::<OtFile>(json)?.into_instance()
}

pub fn read_ot_instance(path: impl AsRef<Path>) -> Result<OtInstance> {
    parse_ot_instance(&std::fs::read_to_string(path)?)
}

/// Integrands as named built-ins or a table keyed by `(i, j)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FunctionSpec {
    Constant {
        value: Ext,
    },
    /// `sum c * x_0^a * y_0^b` over `[c, a, b]` terms.
    Polynomial {
        terms: Vec<(f64, i32, i32)>,
    },
    /// Indicator of a set of support pairs.
    Indicator {
        pairs: Vec<(usize, usize)>,
    },
    /// `|x - y|^power` (Euclidean; `x` and `y` of equal dimension).
    Distance {
        #[serde(default = "one")]
        power: f64,
    },
    Table {
        values: Vec<(usize, usize, Ext)>,
        #[serde(default = "zero")]
        default: Ext,
    },
}

fn one() -> f64 {
    1.0
}

fn zero() -> Ext {
    Ext(0.0)
}

/// A [`FunctionSpec`] ready for evaluation.
#[derive(Debug, Clone)]
pub struct CompiledFunction {
    spec: FunctionSpec,
    table: BTreeMap<(usize, usize), f64>,
}

impl FunctionSpec {
    pub fn compile(&self) -> CompiledFunction {
        let table = match self {
            FunctionSpec::Indicator { pairs } => pairs.iter().map(|&p| (p, 1.0)).collect(),
            FunctionSpec::Table { values, .. } => values.iter().map(|&(i, j, v)| ((i, j), v.0)).collect(),
            _ => BTreeMap::new(),
        };
        CompiledFunction { spec: self.clone(), table }
    }
}

impl PairFunction for CompiledFunction {
    fn eval(&self, at: PairPoint<'_>) -> f64 {
        match &self.spec {
            FunctionSpec::Constant { value } => value.0,
            FunctionSpec::Polynomial { terms } => {
                terms.iter().map(|&(c, a, b)| c * at.x[0].powi(a) * at.y[0].powi(b)).sum()
            }
            FunctionSpec::Indicator { .. } => self.table.get(&(at.i, at.j)).copied().unwrap_or(0.0),
            FunctionSpec::Distance { power } => {
                if at.x.len() != at.y.len() {
                    return f64::NAN;
                }
                let d = at.x.iter().zip(at.y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
                d.powf(*power)
            }
            FunctionSpec::Table { default, .. } => self.table.get(&(at.i, at.j)).copied().unwrap_or(default.0),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::integrate;

    #[test]
    fn measure_round_trip() {
        let json = r#"{"points_x": [[0.0], [1.0]], "points_y": [[0.0], [1.0]], "metric": "absolute",
                       "entries": [[0, 0, 0.2], [0, 1, 0.3], [1, 0, 0.5]]}"#;
        let z = parse_measure(json).unwrap();
        assert_eq!(z.weight(0, 1), 0.3);
        assert!(!z.is_empirical());
        let back = parse_measure(&measure_to_json(&z).unwrap()).unwrap();
        assert_eq!(back.entries(), z.entries());
    }

    #[test]
    fn malformed_measures_are_rejected() {
        assert!(parse_measure(r#"{"points_x": [[0.0]], "points_y": [[0.0]], "entries": [[0, 0, 0.5]]}"#).is_err());
        assert!(parse_measure(r#"{"points_x": [[0.0]], "points_y": [[0.0]], "entries": [[0, 3, 1.0]]}"#).is_err());
        assert!(parse_measure("{").is_err());
    }

    #[test]
    fn csv_samples() {
        let data = "x,y\n0.0,1.0\n0.5,0.5\n1.0,0.0\n0.25,0.75\n";
        let z = pairs_from_csv(data.as_bytes(), 1, Metric::Euclidean).unwrap();
        assert!(z.is_empirical());
        assert_eq!(z.entries().len(), 4);
        assert_eq!(z.carrier_y().point(2), &[0.0]);
        assert!(pairs_from_csv("1.0\n".as_bytes(), 1, Metric::Euclidean).is_err());
    }

    #[test]
    fn ot_instance_with_infinite_prices() {
        let json = r#"{"mu": [0.5, 0.5], "nu": [0.5, 0.5],
                       "cost": {"kind": "table", "table": [[0, "inf"], [1, 0]]},
                       "psi": [0, "inf"], "phi": ["-inf", 0]}"#;
        let inst = parse_ot_instance(json).unwrap();
        assert_eq!(inst.matrix.get(0, 1), f64::INFINITY);
        let p = inst.prices.unwrap();
        assert_eq!(p.psi[1], f64::INFINITY);
        assert_eq!(p.phi[0], f64::NEG_INFINITY);
        assert!(inst.plan.is_none());
    }

    #[test]
    fn function_specs() {
        let z = parse_measure(
            r#"{"points_x": [[0.0], [1.0]], "points_y": [[2.0], [3.0]], "entries": [[0, 0, 0.5], [1, 1, 0.5]]}"#,
        )
        .unwrap();
        let f: FunctionSpec = serde_json::from_str(r#"{"kind": "polynomial", "terms": [[1.0, 1, 1]]}"#).unwrap();
        assert_eq!(integrate(&f.compile(), &z).unwrap(), 1.5);
        let g: FunctionSpec = serde_json::from_str(r#"{"kind": "table", "values": [[1, 1, 4.0]]}"#).unwrap();
        assert_eq!(integrate(&g.compile(), &z).unwrap(), 2.0);
        let h: FunctionSpec = serde_json::from_str(r#"{"kind": "distance"}"#).unwrap();
        assert_eq!(integrate(&h.compile(), &z).unwrap(), 2.0);
        let k: FunctionSpec = serde_json::from_str(r#"{"kind": "constant", "value": "inf"}"#).unwrap();
        assert_eq!(integrate(&k.compile(), &z).unwrap(), f64::INFINITY);
    }
}
