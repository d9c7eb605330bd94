use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::PointCloud;

pub const DEFAULT_SCALES: usize = 20;

/// Strictly decreasing positive radii `rho_0 > rho_1 > ... > rho_K`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleSchedule {
    rho: Vec<f64>,
}

impl ScaleSchedule {
    pub fn new(rho: Vec<f64>) -> Result<Self> {
        if rho.is_empty() {
            return Err(Error::InvalidSchedule("no scales".into()));
        }
        if rho.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
            return Err(Error::InvalidSchedule("radii must be positive and finite".into()));
        }
        if rho.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::InvalidSchedule("radii must be strictly decreasing".into()));
        }
        Ok(Self { rho })
    }

    /// `rho_k = base * 2^-k` for `k = 0..=scales`.
    pub fn dyadic(base: f64, scales: usize) -> Result<Self> {
        Self::new((0..=scales).map(|k| base * 0.5f64.powi(k as i32)).collect())
    }

    /// `rho_k = diam(X) * 2^-k`, `k = 0..=20`. A single-point carrier uses base 1.
    pub fn for_carrier(cloud: &PointCloud) -> Self {
        let diam = cloud.diameter();
        let base = if diam > 0.0 { diam } else { 1.0 };
        Self::dyadic(base, DEFAULT_SCALES).expect("valid dyadic schedule")
    }

    pub fn radii(&self) -> &[f64] {
        &self.rho
    }

    pub fn len(&self) -> usize {
        self.rho.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rho.is_empty()
    }

    pub fn radius(&self, k: usize) -> f64 {
        self.rho[k]
    }
}
