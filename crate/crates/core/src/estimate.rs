//! Monte Carlo estimates with exactly mergeable accumulators.
//!
//! Sums are kept in 128-bit fixed point so that merging partial tallies gives
//! bit-identical results in any order or grouping.

use serde::{Deserialize, Serialize};

const SCALE_BITS: u32 = 32;
const SCALE: f64 = (1u64 << SCALE_BITS) as f64;
/// Largest magnitude a single observation may have.
pub const MAX_OBSERVATION: f64 = (1u64 << 40) as f64;

/// Running `(n, Σx, Σx²)` in fixed point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Tally {
    n: u64,
    sum: i128,
    sumsq: i128,
    overflow: bool,
}

impl Tally {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_values<I: IntoIterator<Item = f64>>(values: I) -> Self {
        let mut t = Self::new();
        for x in values {
            t.push(x);
        }
        t
    }

    pub fn push(&mut self, x: f64) {
        self.n += 1;
        if !x.is_finite() || x.abs() > MAX_OBSERVATION {
            self.overflow = true;
            return;
        }
        let fx = (x * SCALE).round() as i128;
        let fxx = (x * x * SCALE).round() as i128;
        match (self.sum.checked_add(fx), self.sumsq.checked_add(fxx)) {
            (Some(s), Some(q)) => {
                self.sum = s;
                self.sumsq = q;
            }
            _ => self.overflow = true,
        }
    }

    pub fn merge(&mut self, other: &Tally) {
        self.n += other.n;
        self.overflow |= other.overflow;
        match (self.sum.checked_add(other.sum), self.sumsq.checked_add(other.sumsq)) {
            (Some(s), Some(q)) => {
                self.sum = s;
                self.sumsq = q;
            }
            _ => self.overflow = true,
        }
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        if self.overflow || self.n == 0 {
            return f64::NAN;
        }
        self.sum as f64 / SCALE / self.n as f64
    }

    /// Sample variance (denominator `n − 1`).
    pub fn variance(&self) -> f64 {
        if self.overflow || self.n < 2 {
            return f64::NAN;
        }
        let n = self.n as f64;
        let mean = self.sum as f64 / SCALE / n;
        let ss = self.sumsq as f64 / SCALE;
        ((ss - n * mean * mean) / (n - 1.0)).max(0.0)
    }

    pub fn estimate(&self) -> Estimate {
        let stderr = if self.n >= 2 { (self.variance() / self.n as f64).sqrt() } else { 0.0 };
        Estimate {
            value: self.mean(),
            stderr,
            n: self.n,
            censored_mass: None,
            tally: Some(*self),
        }
    }
}

/// A value with its standard error and sample count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
    pub n: u64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub censored_mass: Option<f64>,
    #[serde(skip)]
    tally: Option<Tally>,
}

impl Estimate {
    /// A derived estimate without an underlying tally.
    pub fn derived(value: f64, stderr: f64, n: u64) -> Self {
        Self { value, stderr, n, censored_mass: None, tally: None }
    }

    pub fn exact(value: f64) -> Self {
        Self::derived(value, 0.0, 0)
    }

    pub fn mean_of<I: IntoIterator<Item = f64>>(values: I) -> Self {
        Tally::from_values(values).estimate()
    }

    pub fn with_censored(mut self, mass: f64) -> Self {
        self.censored_mass = Some(mass);
        self
    }

    pub fn tally(&self) -> Option<&Tally> {
        self.tally.as_ref()
    }

    /// Pool two mean-type estimates; `None` if either lacks a tally.
    pub fn merge(&self, other: &Estimate) -> Option<Estimate> {
        let mut t = *self.tally.as_ref()?;
        t.merge(other.tally.as_ref()?);
        let mut e = t.estimate();
        e.censored_mass = match (self.censored_mass, other.censored_mass) {
            (Some(a), Some(b)) => {
                let (na, nb) = (self.n as f64, other.n as f64);
                Some((a * na + b * nb) / (na + nb).max(1.0))
            }
            (a, b) => a.or(b),
        };
        Some(e)
    }

    /// `self − other` for independent estimates.
    pub fn minus(&self, other: &Estimate) -> Estimate {
        Estimate::derived(self.value - other.value, self.stderr.hypot(other.stderr), self.n.min(other.n))
    }

    pub fn scaled(&self, factor: f64) -> Estimate {
        Estimate::derived(self.value * factor, self.stderr * factor.abs(), self.n)
    }

    /// `|self − other|` in units of the combined standard error.
    pub fn z_against(&self, other: &Estimate) -> f64 {
        let diff = (self.value - other.value).abs();
        let se = self.stderr.hypot(other.stderr);
        if se == 0.0 {
            if diff == 0.0 { 0.0 } else { f64::INFINITY }
        } else {
            diff / se
        }
    }

    /// Whether `|self − other| ≤ k` combined standard errors.
    pub fn agrees_with(&self, other: &Estimate, k: f64) -> bool {
        let diff = (self.value - other.value).abs();
        diff <= k * self.stderr.hypot(other.stderr) || diff <= 1e-12 * self.value.abs().max(other.value.abs())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn mean_and_stderr() {
        let e = Estimate::mean_of([1.0, 2.0, 3.0, 4.0]);
        assert!((e.value - 2.5).abs() < 1e-12);
        let sd = (5.0f64 / 3.0).sqrt();
        assert!((e.stderr - sd / 2.0).abs() < 1e-9);
        assert_eq!(e.n, 4);
    }

    #[test]
    fn overflow_is_flagged() {
        let e = Estimate::mean_of([1.0, f64::NAN]);
        assert!(e.value.is_nan());
    }

    proptest! {
        #[test]
        fn merge_is_order_independent(xs in proptest::collection::vec(-1e3f64..1e3, 1..200), cut1 in 0usize..200, cut2 in 0usize..200) {
            let n = xs.len();
            let (a, b) = (cut1 % n, cut2 % n);
            let (lo, hi) = (a.min(b), a.max(b));
            let parts = [&xs[..lo], &xs[lo..hi], &xs[hi..]];
            let ests: Vec<Estimate> = parts.iter().map(|p| Estimate::mean_of(p.iter().copied())).collect();
            let left = ests[0].merge(&ests[1]).unwrap().merge(&ests[2]).unwrap();
            let right = ests[2].merge(&ests[0].merge(&ests[1]).unwrap()).unwrap();
            let whole = Estimate::mean_of(xs.iter().rev().copied());
            prop_assert_eq!(left.tally(), whole.tally());
            prop_assert_eq!(right.tally(), whole.tally());
            prop_assert!(left.value == whole.value || (left.value.is_nan() && whole.value.is_nan()));
            prop_assert_eq!(left.stderr.to_bits(), whole.stderr.to_bits());
        }
    }
}
