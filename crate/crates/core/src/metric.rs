//! Metrics on coordinate vectors and exact distance-to-radius comparisons.
//!
//! Every finite `f64` is a dyadic rational, so comparisons `d(a, b) <=> r`
//! can be decided exactly. A float filter settles the common case and the
//! exact rational path only runs near ties. No epsilon is ever applied: the
//! open/closed distinction of balls is strict.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Metric {
    Euclidean,
    /// `|a - b|` on the real line; requires dimension 1.
    #[serde(alias = "absolute")]
    AbsoluteDifference,
    #[serde(alias = "max")]
    MaxNorm,
}

impl Metric {
    pub fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        debug_assert_eq!(a.len(), b.len());
        match self {
            Metric::Euclidean => a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt(),
            Metric::AbsoluteDifference => (a[0] - b[0]).abs(),
            Metric::MaxNorm => a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max),
        }
    }

    /// Exact comparison of `d(a, b)` with a rational radius.
    pub fn compare(&self, a: &[f64], b: &[f64], radius: &Radius) -> Ordering {
        self.compare_with(a, b, radius.to_f64(), || radius.to_big())
    }

    /// Exact comparison of `d(a, b)` with a float radius (read as the
    /// rational it represents).
    pub fn compare_f64(&self, a: &[f64], b: &[f64], radius: f64) -> Ordering {
        self.compare_with(a, b, radius, || BigRational::from_float(radius).expect("finite radius"))
    }

    fn compare_with(&self, a: &[f64], b: &[f64], approx: f64, exact: impl FnOnce() -> BigRational) -> Ordering {
        const REL: f64 = 1e-9;
        let d = self.distance(a, b);
        if approx > 1e-100 && d.is_finite() {
            if d > approx * (1.0 + REL) {
                return Ordering::Greater;
            }
            if d < approx * (1.0 - REL) {
                return Ordering::Less;
            }
        }
        self.compare_exact(a, b, &exact())
    }

    fn compare_exact(&self, a: &[f64], b: &[f64], radius: &BigRational) -> Ordering {
        let diff = |x: f64, y: f64| -> BigRational {
            BigRational::from_float(x).expect("finite coordinate")
                - BigRational::from_float(y).expect("finite coordinate")
        };
        match self {
            Metric::Euclidean => {
                let mut sq = BigRational::zero();
                for (x, y) in a.iter().zip(b) {
                    let t = diff(*x, *y);
                    sq += &t * &t;
                }
                sq.cmp(&(radius * radius))
            }
            Metric::AbsoluteDifference => diff(a[0], b[0]).abs().cmp(radius),
            Metric::MaxNorm => {
                a.iter().zip(b).map(|(x, y)| diff(*x, *y).abs()).max().unwrap_or_else(BigRational::zero).cmp(radius)
            }
        }
    }
}

/// Strictly positive rational radius `p/q`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Radius(Ratio<i128>);

impl Radius {
    pub fn new(num: i128, den: i128) -> Result<Self> {
        if den == 0 {
            return Err(Error::InvalidRadius(format!("{num}/{den}")));
        }
        Self::from_ratio(Ratio::new(num, den))
    }

    pub fn from_ratio(r: Ratio<i128>) -> Result<Self> {
        if r <= Ratio::from_integer(0) {
            return Err(Error::InvalidRadius(format!("{r} is not positive")));
        }
        Ok(Radius(r))
    }

    /// `k / 2^m`.
    pub fn dyadic(k: i128, m: u32) -> Result<Self> {
        Self::new(k, 1i128 << m)
    }

    /// Largest `k / 2^m` that is `<= value`.
    pub fn dyadic_floor(value: f64, m: u32) -> Result<Self> {
        let scaled = (value * (1u64 << m) as f64).floor();
        Self::dyadic(scaled as i128, m)
    }

    /// Smallest `k / 2^m` that is `>= value`.
    pub fn dyadic_ceil(value: f64, m: u32) -> Result<Self> {
        let scaled = (value * (1u64 << m) as f64).ceil();
        Self::dyadic(scaled as i128, m)
    }

    pub fn ratio(&self) -> Ratio<i128> {
        self.0
    }

    pub fn to_f64(&self) -> f64 {
        self.0.numer().to_f64().unwrap_or(f64::INFINITY) / self.0.denom().to_f64().unwrap_or(1.0)
    }

    pub fn to_big(&self) -> BigRational {
        BigRational::new(BigInt::from(*self.0.numer()), BigInt::from(*self.0.denom()))
    }

    /// `self * factor`; fails if the product is not positive.
    pub fn scaled(&self, factor: Ratio<i128>) -> Result<Self> {
        Self::from_ratio(self.0 * factor)
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "euclidean" => Ok(Metric::Euclidean),
            "absolute-difference" | "absolute" => Ok(Metric::AbsoluteDifference),
            "max-norm" | "max" => Ok(Metric::MaxNorm),
            _ => Err(Error::InvalidCloud(format!("unknown metric {s:?}"))),
        }
    }
}

impl fmt::Display for Radius {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.0.numer(), self.0.denom())
    }
}

impl FromStr for Radius {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidRadius(s.to_string());
        match s.split_once('/') {
            Some((p, q)) => Radius::new(p.trim().parse().map_err(|_| bad())?, q.trim().parse().map_err(|_| bad())?),
            None => Radius::new(s.trim().parse().map_err(|_| bad())?, 1),
        }
    }
}

impl Serialize for Radius {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Radius {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn boundary_is_exact() {
        let r = Radius::new(1, 10).unwrap();
        // 0.3 - 0.2 in floats is 0.09999999999999998, but the stored
        // coordinates are the exact dyadics nearest 0.3 and 0.2.
        let ord = Metric::AbsoluteDifference.compare(&[0.3], &[0.2], &r);
        let exact = (BigRational::from_float(0.3).unwrap() - BigRational::from_float(0.2).unwrap()).cmp(&r.to_big());
        assert_eq!(ord, exact);
        assert_eq!(Metric::AbsoluteDifference.compare(&[0.5], &[0.0], &Radius::new(1, 2).unwrap()), Ordering::Equal);
    }

    #[test]
    fn euclidean_pythagorean_tie() {
        let r = Radius::new(5, 1).unwrap();
        assert_eq!(Metric::Euclidean.compare(&[0.0, 0.0], &[3.0, 4.0], &r), Ordering::Equal);
        assert_eq!(Metric::MaxNorm.compare(&[0.0, 0.0], &[3.0, 4.0], &r), Ordering::Less);
        assert_eq!(Metric::Euclidean.compare_f64(&[0.0, 0.0], &[3.0, 4.0], 5.0), Ordering::Equal);
    }

    #[test]
    fn radius_parsing_and_dyadics() {
        let r: Radius = "3/4".parse().unwrap();
        assert_eq!(r.to_string(), "3/4");
        assert!("0/1".parse::<Radius>().is_err());
        assert!("-1/2".parse::<Radius>().is_err());
        assert!("x".parse::<Radius>().is_err());
        let f = Radius::dyadic_floor(0.3, 4).unwrap();
        assert_eq!(f.to_string(), "1/4");
        let c = Radius::dyadic_ceil(0.3, 4).unwrap();
        assert_eq!(c.to_string(), "5/16");
    }
}
