use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::measure::{marginal_x, marginal_y, DiscreteMeasure, JointMeasure};

pub const MARGINAL_TOL: f64 = 1e-10;

/// A joint measure `pi` with declared marginals `mu`, `nu`.
#[derive(Debug, Clone)]
pub struct TransferencePlan {
    plan: JointMeasure,
    mu: DiscreteMeasure,
    nu: DiscreteMeasure,
}

impl TransferencePlan {
    pub fn new(plan: JointMeasure, mu: DiscreteMeasure, nu: DiscreteMeasure) -> Result<Self> {
        let check = |got: &DiscreteMeasure, want: &DiscreteMeasure, side: &str| -> Result<()> {
            if got.weights().len() != want.weights().len() {
                return Err(Error::InvalidMeasure(format!("{side} marginal has the wrong carrier size")));
            }
            for (k, (a, b)) in got.weights().iter().zip(want.weights()).enumerate() {
                if (a - b).abs() > MARGINAL_TOL {
                    return Err(Error::InvalidMeasure(format!(
                        "{side} marginal differs at atom {k}: {a} vs declared {b}"
                    )));
                }
            }
            Ok(())
        };
        check(&marginal_x(&plan), &mu, "x")?;
        check(&marginal_y(&plan), &nu, "y")?;
        Ok(Self { plan, mu, nu })
    }

    /// The plan together with its own marginals.
    pub fn from_joint(plan: JointMeasure) -> Self {
        let (mu, nu) = (marginal_x(&plan), marginal_y(&plan));
        Self { plan, mu, nu }
    }

    pub fn plan(&self) -> &JointMeasure {
        &self.plan
    }

    pub fn mu(&self) -> &DiscreteMeasure {
        &self.mu
    }

    pub fn nu(&self) -> &DiscreteMeasure {
        &self.nu
    }
}

impl Serialize for TransferencePlan {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_seq(self.plan.entries().iter().map(|e| (e.i, e.j, e.w)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::PointCloud;
    use std::sync::Arc;

    #[test]
    fn marginals_are_checked() {
        let c = Arc::new(PointCloud::line(&[0.0, 1.0]).unwrap());
        let z = JointMeasure::new(c.clone(), c.clone(), [(0, 0, 0.5), (1, 1, 0.5)]).unwrap();
        let u = DiscreteMeasure::uniform(c.clone()).unwrap();
        assert!(TransferencePlan::new(z.clone(), u.clone(), u.clone()).is_ok());
        let skew = DiscreteMeasure::new(c, vec![0.25, 0.75]).unwrap();
        assert!(TransferencePlan::new(z, u, skew).is_err());
    }
}
