//! Axis-aligned observation windows and small Euclidean helpers.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{RcmError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryMode {
    /// Distances wrap around (periodic box).
    Torus,
    /// Plain Euclidean distances inside the box.
    #[default]
    Free,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Window {
    lower: Vec<f64>,
    upper: Vec<f64>,
    mode: BoundaryMode,
}

impl Window {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>, mode: BoundaryMode) -> Result<Self> {
        if lower.is_empty() {
            return Err(RcmError::InvalidWindow("dimension must be positive".into()));
        }
        if lower.len() != upper.len() {
            return Err(RcmError::InvalidWindow(format!(
                "corner dimensions differ ({} vs {})",
                lower.len(),
                upper.len()
            )));
        }
        for (axis, (lo, hi)) in lower.iter().zip(&upper).enumerate() {
            if !lo.is_finite() || !hi.is_finite() || hi <= lo {
                return Err(RcmError::InvalidWindow(format!(
                    "axis {axis}: need finite lower < upper, got [{lo}, {hi}]"
                )));
            }
        }
        Ok(Self { lower, upper, mode })
    }

    /// The cube `[0, side]^d`.
    pub fn cube(dimension: usize, side: f64, mode: BoundaryMode) -> Result<Self> {
        Self::new(vec![0.0; dimension], vec![side; dimension], mode)
    }

    pub fn dimension(&self) -> usize {
        self.lower.len()
    }

    pub fn mode(&self) -> BoundaryMode {
        self.mode
    }

    pub fn with_mode(&self, mode: BoundaryMode) -> Self {
        Self {
            mode,
            ..self.clone()
        }
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn side(&self, axis: usize) -> f64 {
        self.upper[axis] - self.lower[axis]
    }

    pub fn min_side(&self) -> f64 {
        (0..self.dimension())
            .map(|a| self.side(a))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn volume(&self) -> f64 {
        (0..self.dimension()).map(|a| self.side(a)).product()
    }

    pub fn center(&self) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(l, u)| 0.5 * (l + u))
            .collect()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(v, (l, u))| *v >= *l && *v <= *u)
    }

    /// Window grown by `width` on every side (the `B ⊕ shell` box). Free mode.
    pub fn expanded(&self, width: f64) -> Result<Self> {
        Self::new(
            self.lower.iter().map(|l| l - width).collect(),
            self.upper.iter().map(|u| u + width).collect(),
            BoundaryMode::Free,
        )
    }

    /// Window shrunk by `margin` on every side.
    pub fn shrunk(&self, margin: f64) -> Result<Self> {
        Self::new(
            self.lower.iter().map(|l| l + margin).collect(),
            self.upper.iter().map(|u| u - margin).collect(),
            self.mode,
        )
    }

    /// Window scaled about the origin by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(
            self.lower.iter().map(|l| l * factor).collect(),
            self.upper.iter().map(|u| u * factor).collect(),
            self.mode,
        )
    }

    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut Vec<f64>) {
        for (l, u) in self.lower.iter().zip(&self.upper) {
            out.push(l + (u - l) * rng.gen::<f64>());
        }
    }

    /// Displacement `b - a`, using the minimum image in torus mode.
    #[inline]
    pub fn displacement_into(&self, a: &[f64], b: &[f64], out: &mut [f64]) {
        match self.mode {
            BoundaryMode::Free => {
                for i in 0..a.len() {
                    out[i] = b[i] - a[i];
                }
            }
            BoundaryMode::Torus => {
                for i in 0..a.len() {
                    let side = self.upper[i] - self.lower[i];
                    let mut v = b[i] - a[i];
                    if v > 0.5 * side {
                        v -= side;
                    } else if v < -0.5 * side {
                        v += side;
                    }
                    out[i] = v;
                }
            }
        }
    }

    #[inline]
    pub fn distance_sq(&self, a: &[f64], b: &[f64]) -> f64 {
        let mut s = 0.0;
        for i in 0..a.len() {
            let mut v = b[i] - a[i];
            if self.mode == BoundaryMode::Torus {
                let side = self.upper[i] - self.lower[i];
                if v > 0.5 * side {
                    v -= side;
                } else if v < -0.5 * side {
                    v += side;
                }
            }
            s += v * v;
        }
        s
    }

    /// Torus windows must have every side at least twice the range bound.
    pub fn check_range(&self, range: f64) -> Result<()> {
        if self.mode == BoundaryMode::Torus && self.min_side() < 2.0 * range {
            return Err(RcmError::TorusTooSmall {
                side: self.min_side(),
                range,
            });
        }
        Ok(())
    }
}

#[inline]
pub fn norm_sq(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

#[inline]
pub fn norm(x: &[f64]) -> f64 {
    norm_sq(x).sqrt()
}

/// Volume of the unit ball in `d` dimensions.
pub fn unit_ball_volume(d: usize) -> f64 {
    // v_0 = 1, v_1 = 2, v_d = 2π/d · v_{d-2}
    match d {
        0 => 1.0,
        1 => 2.0,
        _ => 2.0 * std::f64::consts::PI / d as f64 * unit_ball_volume(d - 2),
    }
}

/// Surface area of the unit sphere `S^{d-1}`.
pub fn unit_sphere_area(d: usize) -> f64 {
    d as f64 * unit_ball_volume(d)
}

pub fn ball_volume(d: usize, r: f64) -> f64 {
    unit_ball_volume(d) * r.max(0.0).powi(d as i32)
}

/// Uniform direction on `S^{d-1}` written into `out`.
pub fn random_direction<R: Rng + ?Sized>(rng: &mut R, d: usize, out: &mut [f64]) {
    use rand_distr::{Distribution, StandardNormal};
    loop {
        let mut s = 0.0;
        for v in out.iter_mut().take(d) {
            let z: f64 = StandardNormal.sample(rng);
            *v = z;
            s += z * z;
        }
        if s > 1e-300 {
            let inv = 1.0 / s.sqrt();
            for v in out.iter_mut().take(d) {
                *v *= inv;
            }
            return;
        }
    }
}

/// Volume of the intersection of two balls of radii `a`, `b` at center
/// distance `r`, for `d ∈ {1, 2, 3}`.
pub fn ball_intersection_volume(d: usize, a: f64, b: f64, r: f64) -> f64 {
    use std::f64::consts::PI;
    let r = r.abs();
    // canonical argument order keeps the result bitwise symmetric in (a, b)
    let (a, b) = if a <= b { (a, b) } else { (b, a) };
    if r >= a + b {
        return 0.0;
    }
    let (small, large) = if a <= b { (a, b) } else { (b, a) };
    if r <= large - small {
        return ball_volume(d, small);
    }
    match d {
        1 => a + b - r,
        2 => {
            let part = |x: f64, y: f64| {
                let c = ((r * r + x * x - y * y) / (2.0 * r * x)).clamp(-1.0, 1.0);
                x * x * c.acos()
            };
            let k = (-r + a + b) * (r + a - b) * (r - a + b) * (r + a + b);
            part(a, b) + part(b, a) - 0.5 * k.max(0.0).sqrt()
        }
        3 => {
            PI * (a + b - r).powi(2)
                * (r * r + 2.0 * r * (a + b) - 3.0 * (a - b).powi(2))
                / (12.0 * r)
        }
        _ => panic!("ball intersection volume implemented for d <= 3 only"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn rejects_degenerate_windows() {
        assert!(Window::new(vec![0.0], vec![0.0], BoundaryMode::Free).is_err());
        assert!(Window::new(vec![], vec![], BoundaryMode::Free).is_err());
        assert!(Window::new(vec![0.0, 0.0], vec![1.0], BoundaryMode::Free).is_err());
        assert!(Window::new(vec![0.0], vec![f64::INFINITY], BoundaryMode::Free).is_err());
    }

    #[test]
    fn volumes() {
        let w = Window::cube(2, 10.0, BoundaryMode::Free).unwrap();
        assert_eq!(w.volume(), 100.0);
        assert!((unit_ball_volume(2) - PI).abs() < 1e-15);
        assert!((unit_ball_volume(3) - 4.0 / 3.0 * PI).abs() < 1e-14);
        assert!((unit_ball_volume(4) - PI * PI / 2.0).abs() < 1e-14);
    }

    #[test]
    fn torus_minimum_image() {
        let w = Window::cube(2, 10.0, BoundaryMode::Torus).unwrap();
        let d = w.distance_sq(&[0.5, 0.5], &[9.5, 9.5]);
        assert!((d - 2.0).abs() < 1e-12);
        let mut out = [0.0; 2];
        w.displacement_into(&[0.5, 5.0], &[9.5, 5.0], &mut out);
        assert!((out[0] + 1.0).abs() < 1e-12);
        assert!(w.check_range(5.0).is_ok());
        assert!(w.check_range(5.1).is_err());
    }

    #[test]
    fn lens_limits() {
        for d in 1..=3 {
            let full = ball_intersection_volume(d, 1.0, 1.0, 0.0);
            assert!((full - ball_volume(d, 1.0)).abs() < 1e-12);
            assert_eq!(ball_intersection_volume(d, 1.0, 1.0, 2.0), 0.0);
            // continuity near both ends
            let near = ball_intersection_volume(d, 1.0, 0.7, 0.3 + 1e-9);
            assert!((near - ball_volume(d, 0.7)).abs() < 1e-6);
        }
    }

    #[test]
    fn lens_area_matches_grid_count() {
        // independent oracle: fine midpoint grid over the bounding box
        let (a, b, r) = (1.0, 0.6, 1.1);
        let h = 1e-3;
        let mut count = 0u64;
        let nx = (2.0 / h) as i64;
        for i in 0..nx {
            for j in 0..nx {
                let x = -1.0 + (i as f64 + 0.5) * h;
                let y = -1.0 + (j as f64 + 0.5) * h;
                if x * x + y * y <= a * a && (x - r).powi(2) + y * y <= b * b {
                    count += 1;
                }
            }
        }
        let grid = count as f64 * h * h;
        assert!((grid - ball_intersection_volume(2, a, b, r)).abs() < 2e-4);
    }
}
