//! Mark distributions `Q`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{RcmError, Result};
use crate::quadrature::{gl32, integrate_rule};

const DISCRETE_WEIGHT_TOL: f64 = 1e-9;
const DENSITY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum MarkDistribution {
    PointMass { value: f64 },
    /// Finitely many atoms `(mark, weight)`.
    Discrete { atoms: Vec<(f64, f64)> },
    Uniform { lo: f64, hi: f64 },
    /// Density proportional to `x^(-exponent)` on `[lo, hi]`, `lo > 0`.
    PowerLaw { lo: f64, hi: f64, exponent: f64 },
}

impl Default for MarkDistribution {
    fn default() -> Self {
        MarkDistribution::PointMass { value: 0.0 }
    }
}

impl MarkDistribution {
    pub fn point(value: f64) -> Self {
        MarkDistribution::PointMass { value }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            MarkDistribution::PointMass { value } => {
                if !value.is_finite() {
                    return Err(RcmError::InvalidMarks(format!("non-finite point mass {value}")));
                }
            }
            MarkDistribution::Discrete { atoms } => {
                if atoms.is_empty() {
                    return Err(RcmError::InvalidMarks("no atoms".into()));
                }
                let mut total = 0.0;
                for (m, w) in atoms {
                    if !m.is_finite() || !(*w > 0.0) || !w.is_finite() {
                        return Err(RcmError::InvalidMarks(format!(
                            "atom ({m}, {w}) must have finite mark and positive weight"
                        )));
                    }
                    total += w;
                }
                if (total - 1.0).abs() > DISCRETE_WEIGHT_TOL {
                    return Err(RcmError::InvalidMarks(format!("weights sum to {total}, not 1")));
                }
            }
            MarkDistribution::Uniform { lo, hi } => {
                if !lo.is_finite() || !hi.is_finite() || hi <= lo {
                    return Err(RcmError::InvalidMarks(format!("bad interval [{lo}, {hi}]")));
                }
            }
            MarkDistribution::PowerLaw { lo, hi, exponent } => {
                if !(*lo > 0.0) || !hi.is_finite() || hi <= lo || !exponent.is_finite() {
                    return Err(RcmError::InvalidMarks(format!(
                        "power law needs 0 < lo < hi < inf, got [{lo}, {hi}] exponent {exponent}"
                    )));
                }
                let mass: f64 = self.quadrature_nodes().iter().map(|(_, w)| w).sum();
                if (mass - 1.0).abs() > DENSITY_TOL {
                    return Err(RcmError::InvalidMarks(format!(
                        "density integrates to {mass}, not 1"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            MarkDistribution::PointMass { value } => *value,
            MarkDistribution::Discrete { atoms } => {
                let u: f64 = rng.gen();
                let mut acc = 0.0;
                for (m, w) in atoms {
                    acc += w;
                    if u < acc {
                        return *m;
                    }
                }
                atoms[atoms.len() - 1].0
            }
            MarkDistribution::Uniform { lo, hi } => lo + (hi - lo) * rng.gen::<f64>(),
            MarkDistribution::PowerLaw { lo, hi, exponent } => {
                let u: f64 = rng.gen();
                let a = 1.0 - exponent;
                if a.abs() < 1e-12 {
                    lo * (hi / lo).powf(u)
                } else {
                    (lo.powf(a) + u * (hi.powf(a) - lo.powf(a))).powf(1.0 / a)
                }
            }
        }
    }

    /// Density of the power law or uniform at `x` (zero outside support).
    fn density(&self, x: f64) -> f64 {
        match self {
            MarkDistribution::Uniform { lo, hi } => {
                if x >= *lo && x <= *hi {
                    1.0 / (hi - lo)
                } else {
                    0.0
                }
            }
            MarkDistribution::PowerLaw { lo, hi, exponent } => {
                if x < *lo || x > *hi {
                    return 0.0;
                }
                let a = 1.0 - exponent;
                let norm = if a.abs() < 1e-12 {
                    (hi / lo).ln()
                } else {
                    (hi.powf(a) - lo.powf(a)) / a
                };
                x.powf(-exponent) / norm
            }
            _ => 0.0,
        }
    }

    /// Quadrature representation of `Q`: the atoms for discrete laws, a
    /// 32-point Gauss–Legendre rule weighted by the density otherwise.
    pub fn quadrature_nodes(&self) -> Vec<(f64, f64)> {
        match self {
            MarkDistribution::PointMass { value } => vec![(*value, 1.0)],
            MarkDistribution::Discrete { atoms } => atoms.clone(),
            MarkDistribution::Uniform { lo, hi } | MarkDistribution::PowerLaw { lo, hi, .. } => {
                let rule = gl32();
                let half = 0.5 * (hi - lo);
                let mid = 0.5 * (hi + lo);
                rule.0
                    .iter()
                    .zip(&rule.1)
                    .map(|(x, w)| {
                        let m = mid + half * x;
                        (m, w * half * self.density(m))
                    })
                    .collect()
            }
        }
    }

    /// `Q((-inf, x])`.
    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            MarkDistribution::PointMass { value } => (x >= *value) as u8 as f64,
            MarkDistribution::Discrete { atoms } => atoms.iter().filter(|(m, _)| *m <= x).map(|(_, w)| w).sum(),
            MarkDistribution::Uniform { lo, hi } => ((x - lo) / (hi - lo)).clamp(0.0, 1.0),
            MarkDistribution::PowerLaw { lo, hi, exponent } => {
                let x = x.clamp(*lo, *hi);
                let a = 1.0 - exponent;
                if a.abs() < 1e-12 {
                    (x / lo).ln() / (hi / lo).ln()
                } else {
                    (x.powf(a) - lo.powf(a)) / (hi.powf(a) - lo.powf(a))
                }
            }
        }
    }

    /// `(inf, sup)` of the support.
    pub fn support(&self) -> (f64, f64) {
        match self {
            MarkDistribution::PointMass { value } => (*value, *value),
            MarkDistribution::Discrete { atoms } => atoms.iter().fold(
                (f64::INFINITY, f64::NEG_INFINITY),
                |(lo, hi), (m, _)| (lo.min(*m), hi.max(*m)),
            ),
            MarkDistribution::Uniform { lo, hi } | MarkDistribution::PowerLaw { lo, hi, .. } => {
                (*lo, *hi)
            }
        }
    }

    pub fn is_atomic(&self) -> bool {
        matches!(
            self,
            MarkDistribution::PointMass { .. } | MarkDistribution::Discrete { .. }
        )
    }

    /// `∫ g dQ` computed from the quadrature nodes.
    pub fn expect<F: FnMut(f64) -> f64>(&self, mut g: F) -> f64 {
        self.quadrature_nodes().into_iter().map(|(m, w)| w * g(m)).sum()
    }
}

/// Check that a continuous density integrates to one on its support.
pub fn density_mass(dist: &MarkDistribution) -> f64 {
    match dist {
        MarkDistribution::Uniform { lo, hi } | MarkDistribution::PowerLaw { lo, hi, .. } => {
            integrate_rule(gl32(), *lo, *hi, |x| dist.density(x))
        }
        _ => 1.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;

    #[test]
    fn validation() {
        assert!(MarkDistribution::Discrete { atoms: vec![(0.0, 0.3), (1.0, 0.7)] }
            .validate()
            .is_ok());
        assert!(MarkDistribution::Discrete { atoms: vec![(0.0, 0.3), (1.0, 0.6)] }
            .validate()
            .is_err());
        assert!(MarkDistribution::Discrete { atoms: vec![(0.0, -0.3), (1.0, 1.3)] }
            .validate()
            .is_err());
        assert!(MarkDistribution::Uniform { lo: 1.0, hi: 1.0 }.validate().is_err());
        assert!(MarkDistribution::PowerLaw { lo: 0.1, hi: 1.0, exponent: 0.5 }
            .validate()
            .is_ok());
        assert!(MarkDistribution::PowerLaw { lo: 0.0, hi: 1.0, exponent: 0.5 }
            .validate()
            .is_err());
    }

    #[test]
    fn densities_integrate_to_one() {
        for d in [
            MarkDistribution::Uniform { lo: 0.0, hi: 3.0 },
            MarkDistribution::PowerLaw { lo: 0.2, hi: 1.0, exponent: 1.0 },
            MarkDistribution::PowerLaw { lo: 0.2, hi: 1.0, exponent: 2.5 },
        ] {
            assert!((density_mass(&d) - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn discrete_frequencies() {
        let q = MarkDistribution::Discrete { atoms: vec![(0.0, 0.3), (1.0, 0.7)] };
        let mut rng = RngStream::new(5, 0).rng();
        let n = 10_000;
        let ones = (0..n).filter(|_| q.sample(&mut rng) == 1.0).count() as f64;
        let se = (0.7f64 * 0.3 / n as f64).sqrt();
        assert!((ones / n as f64 - 0.7).abs() < 3.0 * se);
    }

    #[test]
    fn power_law_sampler_matches_mean() {
        let q = MarkDistribution::PowerLaw { lo: 0.2, hi: 1.0, exponent: 1.5 };
        let exact = q.expect(|m| m);
        let mut rng = RngStream::new(6, 0).rng();
        let n = 100_000;
        let vals: Vec<f64> = (0..n).map(|_| q.sample(&mut rng)).collect();
        let mean = vals.iter().sum::<f64>() / n as f64;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!((mean - exact).abs() < 4.0 * (var / n as f64).sqrt());
        assert!(vals.iter().all(|v| (0.2..=1.0).contains(v)));
    }

    #[test]
    fn cdf_matches_density_integral() {
        for q in [
            MarkDistribution::PowerLaw { lo: 0.2, hi: 1.0, exponent: 1.5 },
            MarkDistribution::PowerLaw { lo: 0.5, hi: 2.0, exponent: 1.0 },
            MarkDistribution::Uniform { lo: -1.0, hi: 3.0 },
        ] {
            let (lo, hi) = q.support();
            let x = lo + 0.37 * (hi - lo);
            let direct = integrate_rule(gl32(), lo, x, |m| q.density(m));
            assert!((q.cdf(x) - direct).abs() < 1e-12, "{q:?}");
            assert_eq!(q.cdf(lo - 1.0), 0.0);
            assert!((q.cdf(hi) - 1.0).abs() < 1e-14);
        }
        let d = MarkDistribution::Discrete { atoms: vec![(0.0, 0.25), (1.0, 0.75)] };
        assert_eq!(d.cdf(0.5), 0.25);
    }
}
