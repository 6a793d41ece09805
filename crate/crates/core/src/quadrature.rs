//! Gauss–Legendre rules and adaptive one-dimensional integration.

use std::f64::consts::PI;
use std::sync::OnceLock;

use crate::error::{RcmError, Result};

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Legendre recurrence for P_n(z) and its derivative
            let mut p0 = 1.0;
            let mut p1 = 0.0;
            for j in 0..n {
                let p2 = p1;
                p1 = p0;
                p0 = ((2 * j + 1) as f64 * z * p1 - j as f64 * p2) / (j + 1) as f64;
            }
            dp = n as f64 * (z * p0 - p1) / (z * z - 1.0);
            let dz = p0 / dp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = -z;
        nodes[n - 1 - i] = z;
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

pub(crate) fn gl16() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(16))
}

pub(crate) fn gl32() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(32))
}

/// Apply a rule on `[-1, 1]` to `f` over `[a, b]`.
#[inline]
pub fn integrate_rule<F: FnMut(f64) -> f64>(rule: &(Vec<f64>, Vec<f64>), a: f64, b: f64, mut f: F) -> f64 {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    rule.0
        .iter()
        .zip(&rule.1)
        .map(|(x, w)| w * f(mid + half * x))
        .sum::<f64>()
        * half
}

/// Composite 16-point Gauss–Legendre on `[a, b]`, doubling the panel count
/// until two successive estimates agree to `rel_tol`.
pub fn adaptive_integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64) -> Result<f64> {
    if b <= a {
        return Ok(0.0);
    }
    let rule = gl16();
    let composite = |panels: usize| -> f64 {
        let h = (b - a) / panels as f64;
        (0..panels)
            .map(|k| integrate_rule(rule, a + k as f64 * h, a + (k + 1) as f64 * h, &f))
            .sum()
    };
    let mut prev = composite(1);
    let mut panels = 2;
    while panels <= 1 << 14 {
        let cur = composite(panels);
        if (cur - prev).abs() <= rel_tol * cur.abs().max(1e-300) || cur == prev {
            return Ok(cur);
        }
        prev = cur;
        panels *= 2;
    }
    Err(RcmError::QuadratureDiverged(format!(
        "no convergence on [{a}, {b}] after {} panels (last estimate {prev})",
        panels / 2
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_two_and_polynomials_exact() {
        for n in [1, 2, 5, 8, 16, 32] {
            let (x, w) = gauss_legendre(n);
            assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-13);
            // degree 2n-1 exactness
            let deg = 2 * n - 1;
            let got: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32 - 1)).sum();
            let exact = if (deg - 1) % 2 == 0 { 2.0 / deg as f64 } else { 0.0 };
            assert!((got - exact).abs() < 1e-12, "n={n}");
        }
    }

    #[test]
    fn adaptive_converges_and_reports_failure() {
        let v = adaptive_integrate(|x| x.exp(), 0.0, 1.0, 1e-12).unwrap();
        assert!((v - (1f64.exp() - 1.0)).abs() < 1e-12);
        let v = adaptive_integrate(|x| x.sqrt(), 0.0, 1.0, 1e-8).unwrap();
        assert!((v - 2.0 / 3.0).abs() < 1e-7);
        assert!(adaptive_integrate(|x| (1.0 / x).sin() / x, 1e-12, 1.0, 1e-12).is_err());
    }
}
