use serde::{Deserialize, Serialize};

use super::cost::CostMatrix;
use crate::error::{Error, Result};

/// Prices `psi` on `X` (values in `R u {+inf}`) and `phi` on `Y` (values in
/// `R u {-inf}`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PricePair {
    #[serde(with = "super::ext::vec")]
    pub psi: Vec<f64>,
    #[serde(with = "super::ext::vec")]
    pub phi: Vec<f64>,
}

/// `phi(y) - psi(x)` with `psi = +inf` or `phi = -inf` giving `-inf`.
pub fn price_difference(phi: f64, psi: f64) -> f64 {
    if psi == f64::INFINITY || phi == f64::NEG_INFINITY {
        f64::NEG_INFINITY
    } else {
        phi - psi
    }
}

impl PricePair {
    pub fn new(psi: Vec<f64>, phi: Vec<f64>) -> Result<Self> {
        if let Some(v) = psi.iter().find(|v| v.is_nan() || **v == f64::NEG_INFINITY) {
            return Err(Error::InvalidMeasure(format!("psi value {v} not in R u {{+inf}}")));
        }
        if let Some(v) = phi.iter().find(|v| v.is_nan() || **v == f64::INFINITY) {
            return Err(Error::InvalidMeasure(format!("phi value {v} not in R u {{-inf}}")));
        }
        Ok(Self { psi, phi })
    }

    /// First pair `(i, j)` with `phi(y_j) - psi(x_i) > c(x_i, y_j) + tol`.
    pub fn check_competitive(&self, c: &CostMatrix, tol: f64) -> Result<()> {
        if self.psi.len() != c.rows() || self.phi.len() != c.cols() {
            return Err(Error::InvalidCost(format!(
                "prices have shape {} x {}, cost is {} x {}",
                self.psi.len(),
                self.phi.len(),
                c.rows(),
                c.cols()
            )));
        }
        for (i, &psi) in self.psi.iter().enumerate() {
            for (j, &phi) in self.phi.iter().enumerate() {
                let lhs = price_difference(phi, psi);
                let cost = c.get(i, j);
                if lhs > cost + tol {
                    return Err(Error::NotCompetitive { i, j, lhs, cost });
                }
            }
        }
        Ok(())
    }

    pub fn is_competitive(&self, c: &CostMatrix, tol: f64) -> bool {
        self.check_competitive(c, tol).is_ok()
    }
}

/// `psi(x) = max_y (phi(y) - c(x, y))`; terms with `phi = -inf` or
/// `c = +inf` are `-inf`.
pub fn c_transform_phi(phi: &[f64], c: &CostMatrix) -> Vec<f64> {
    (0..c.rows())
        .map(|i| {
            phi.iter()
                .enumerate()
                .map(|(j, &p)| {
                    let cost = c.get(i, j);
                    if p == f64::NEG_INFINITY || cost == f64::INFINITY {
                        f64::NEG_INFINITY
                    } else {
                        p - cost
                    }
                })
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect()
}

/// `phi(y) = min_x (psi(x) + c(x, y))`; terms with `psi = +inf` or
/// `c = +inf` are `+inf`.
pub fn c_transform_psi(psi: &[f64], c: &CostMatrix) -> Vec<f64> {
    (0..c.cols()).map(|j| psi.iter().enumerate().map(|(i, &p)| p + c.get(i, j)).fold(f64::INFINITY, f64::min)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn swap() -> CostMatrix {
        CostMatrix::from_rows(&[vec![0.0, 2.0], vec![2.0, 0.0]]).unwrap()
    }

    #[test]
    fn transforms_by_direct_max_and_min() {
        assert_eq!(c_transform_phi(&[1.0, 3.0], &swap()), vec![1.0, 3.0]);
        assert_eq!(c_transform_psi(&[1.0, 3.0], &swap()), vec![1.0, 3.0]);
    }

    #[test]
    fn zero_prices_on_distance() {
        let c = CostMatrix::from_rows(&[vec![0.0, 1.0, 2.0], vec![1.0, 0.0, 1.0], vec![2.0, 1.0, 0.0]]).unwrap();
        assert_eq!(c_transform_phi(&[0.0; 3], &c), vec![0.0; 3]);
        assert_eq!(c_transform_psi(&[0.0; 3], &c), vec![0.0; 3]);
    }

    #[test]
    fn infinite_psi_drops_out() {
        let phi = c_transform_psi(&[f64::INFINITY, 3.0], &swap());
        assert_eq!(phi, vec![5.0, 3.0]);
        let c = CostMatrix::from_rows(&[vec![f64::INFINITY, 1.0]]).unwrap();
        assert_eq!(c_transform_phi(&[5.0, f64::NEG_INFINITY], &c), vec![f64::NEG_INFINITY]);
    }

    #[test]
    fn competitiveness() {
        let p = PricePair::new(vec![0.0, 0.0], vec![0.0, 0.0]).unwrap();
        assert!(p.is_competitive(&swap(), 0.0));
        let q = PricePair::new(vec![f64::INFINITY, 0.0], vec![2.0, f64::NEG_INFINITY]).unwrap();
        assert!(q.is_competitive(&swap(), 0.0));
        let r = PricePair::new(vec![0.0, 0.0], vec![0.5, 0.0]).unwrap();
        assert!(matches!(r.check_competitive(&swap(), 0.0), Err(Error::NotCompetitive { i: 0, j: 0, .. })));
        assert!(PricePair::new(vec![f64::NEG_INFINITY], vec![]).is_err());
        assert!(PricePair::new(vec![], vec![f64::INFINITY]).is_err());
    }

    #[test]
    fn json_uses_strings_for_infinities() {
        let p = PricePair::new(vec![f64::INFINITY, 1.5], vec![f64::NEG_INFINITY]).unwrap();
        let s = serde_json::to_string(&p).unwrap();
        assert_eq!(s, r#"{"psi":["inf",1.5],"phi":["-inf"]}"#);
        assert_eq!(serde_json::from_str::<PricePair>(&s).unwrap(), p);
    }
}
