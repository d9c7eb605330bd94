//! Compensated (Neumaier) summation with extended-real bookkeeping.
//!
//! Infinite terms are tracked separately so that a single `+inf` does not
//! poison the compensation term with `inf - inf`.

/// Running compensated sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
    pos_inf: bool,
    neg_inf: bool,
    nan: bool,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        if x.is_nan() {
            self.nan = true;
            return;
        }
        if x == f64::INFINITY {
            self.pos_inf = true;
            return;
        }
        if x == f64::NEG_INFINITY {
            self.neg_inf = true;
            return;
        }
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    /// The accumulated value; `NaN` when both infinities (or a NaN) were seen.
    pub fn value(&self) -> f64 {
        match (self.nan, self.pos_inf, self.neg_inf) {
            (true, _, _) | (_, true, true) => f64::NAN,
            (_, true, false) => f64::INFINITY,
            (_, false, true) => f64::NEG_INFINITY,
            _ => self.sum + self.comp,
        }
    }

    pub fn is_undefined(&self) -> bool {
        self.nan || (self.pos_inf && self.neg_inf)
    }
}

impl Extend<f64> for CompensatedSum {
    fn extend<I: IntoIterator<Item = f64>>(&mut self, iter: I) {
        for x in iter {
            self.add(x);
        }
    }
}

/// Compensated sum of an iterator, in iteration order.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    let mut acc = CompensatedSum::new();
    acc.extend(iter);
    acc.value()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_small_terms() {
        let xs = [1.0, 1e-16, 1e-16, 1e-16, 1e-16, -1.0];
        assert_eq!(compensated_sum(xs), 4e-16);
        let naive: f64 = xs.iter().sum();
        assert_ne!(naive, 4e-16);
    }

    #[test]
    fn infinities() {
        assert_eq!(compensated_sum([1.0, f64::INFINITY, 2.0]), f64::INFINITY);
        assert_eq!(compensated_sum([f64::NEG_INFINITY, 2.0]), f64::NEG_INFINITY);
        assert!(compensated_sum([f64::NEG_INFINITY, f64::INFINITY]).is_nan());
        assert!(compensated_sum([1.0, f64::NAN]).is_nan());
    }

    #[test]
    fn empty_is_zero() {
        assert_eq!(compensated_sum(std::iter::empty()), 0.0);
    }
}
