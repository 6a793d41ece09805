//! Poisson sampling of marked point configurations and independent thinning.

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{RcmError, Result};
use crate::geometry::Window;
use crate::marks::MarkDistribution;

pub const DEFAULT_POINT_CAP: f64 = 1e7;
pub const DEFAULT_PAIR_CAP: u64 = 50_000_000;

/// Resource guards against runaway `t · volume` and all-pairs enumeration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ResourceCaps {
    pub max_expected_points: f64,
    pub max_pairs: u64,
}

impl Default for ResourceCaps {
    fn default() -> Self {
        Self {
            max_expected_points: DEFAULT_POINT_CAP,
            max_pairs: DEFAULT_PAIR_CAP,
        }
    }
}

/// Borrowed view of one marked point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarkedPoint<'a> {
    pub id: u64,
    pub location: &'a [f64],
    pub mark: f64,
}

/// A finite marked point configuration in a window.
#[derive(Debug, Clone, PartialEq)]
pub struct PointConfiguration {
    window: Window,
    intensity: f64,
    ids: Vec<u64>,
    coords: Vec<f64>,
    marks: Vec<f64>,
}

impl PointConfiguration {
    pub fn empty(window: Window, intensity: f64) -> Self {
        Self {
            window,
            intensity,
            ids: Vec::new(),
            coords: Vec::new(),
            marks: Vec::new(),
        }
    }

    /// Build from explicit points; ids are assigned `0..n`.
    pub fn from_points(window: Window, intensity: f64, points: &[(Vec<f64>, f64)]) -> Result<Self> {
        let mut cfg = Self::empty(window, intensity);
        for (loc, mark) in points {
            cfg.push(loc, *mark)?;
        }
        Ok(cfg)
    }

    /// Append a point with the next free id and return that id.
    pub fn push(&mut self, location: &[f64], mark: f64) -> Result<u64> {
        let id = self.ids.last().map_or(0, |v| v + 1);
        self.push_with_id(id, location, mark)?;
        Ok(id)
    }

    pub(crate) fn push_with_id(&mut self, id: u64, location: &[f64], mark: f64) -> Result<()> {
        if location.len() != self.window.dimension() {
            return Err(RcmError::InvalidArgument(format!(
                "location has dimension {}, window has {}",
                location.len(),
                self.window.dimension()
            )));
        }
        if !self.window.contains(location) {
            return Err(RcmError::InvalidArgument(format!("location {location:?} outside window")));
        }
        self.ids.push(id);
        self.coords.extend_from_slice(location);
        self.marks.push(mark);
        Ok(())
    }

    pub fn window(&self) -> &Window {
        &self.window
    }

    pub fn intensity(&self) -> f64 {
        self.intensity
    }

    pub fn dimension(&self) -> usize {
        self.window.dimension()
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[u64] {
        &self.ids
    }

    pub fn marks(&self) -> &[f64] {
        &self.marks
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    #[inline]
    pub fn location(&self, index: usize) -> &[f64] {
        let d = self.dimension();
        &self.coords[index * d..(index + 1) * d]
    }

    pub fn point(&self, index: usize) -> MarkedPoint<'_> {
        MarkedPoint {
            id: self.ids[index],
            location: self.location(index),
            mark: self.marks[index],
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = MarkedPoint<'_>> + '_ {
        (0..self.len()).map(move |i| self.point(i))
    }

    /// Position of `id` in storage order.
    pub fn index_of(&self, id: u64) -> Option<usize> {
        // ids are increasing for every configuration built by this module
        self.ids.binary_search(&id).ok()
    }

    /// Subset of points (by storage index) as a new configuration.
    pub fn select(&self, keep: &[usize], intensity: f64) -> PointConfiguration {
        let mut out = Self::empty(self.window.clone(), intensity);
        for &i in keep {
            out.ids.push(self.ids[i]);
            out.coords.extend_from_slice(self.location(i));
            out.marks.push(self.marks[i]);
        }
        out
    }

    pub fn with_window(mut self, window: Window) -> Self {
        self.window = window;
        self
    }
}

pub fn check_intensity(t: f64) -> Result<()> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(RcmError::NegativeIntensity(t));
    }
    Ok(())
}

/// Poisson process with intensity `t · λ_d ⊗ Q` restricted to `window`.
pub fn sample_poisson<R: Rng + ?Sized>(
    window: &Window,
    t: f64,
    marks: &MarkDistribution,
    caps: &ResourceCaps,
    rng: &mut R,
) -> Result<PointConfiguration> {
    check_intensity(t)?;
    let expected = t * window.volume();
    if expected > caps.max_expected_points {
        return Err(RcmError::PointCapExceeded {
            expected,
            cap: caps.max_expected_points,
        });
    }
    let mut cfg = PointConfiguration::empty(window.clone(), t);
    if expected == 0.0 {
        return Ok(cfg);
    }
    let n = Poisson::new(expected)
        .map_err(|e| RcmError::InvalidArgument(e.to_string()))?
        .sample(rng) as usize;
    let d = window.dimension();
    cfg.ids = (0..n as u64).collect();
    cfg.coords.reserve(n * d);
    cfg.marks.reserve(n);
    for _ in 0..n {
        window.sample_uniform(rng, &mut cfg.coords);
        cfg.marks.push(marks.sample(rng));
    }
    Ok(cfg)
}

/// Independent thinning: each point is kept with probability `keep_prob`.
/// Ids are preserved in both outputs.
pub fn thin<R: Rng + ?Sized>(
    config: &PointConfiguration,
    keep_prob: f64,
    rng: &mut R,
) -> Result<(PointConfiguration, PointConfiguration)> {
    if !(0.0..=1.0).contains(&keep_prob) {
        return Err(RcmError::ProbabilityOutOfRange(keep_prob));
    }
    let mut kept = Vec::new();
    let mut removed = Vec::new();
    for i in 0..config.len() {
        if rng.gen::<f64>() < keep_prob {
            kept.push(i);
        } else {
            removed.push(i);
        }
    }
    let t = config.intensity();
    Ok((
        config.select(&kept, keep_prob * t),
        config.select(&removed, (1.0 - keep_prob) * t),
    ))
}
