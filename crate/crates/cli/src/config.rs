use std::path::Path;

use anyhow::{anyhow, bail, Context};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use rcmlab_core::{
    BoundaryMode, ConnectionKind, ConnectionModel, ExplorationLimits, MarkDistribution, QuadratureSpec, ResourceCaps,
    Window,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Simulate,
    Explore,
    Sweep,
    ReweightCheck,
    DerivativeCheck,
    Convexity,
    Irreducibility,
    UniquenessProbe,
    ConsistencySuite,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    #[serde(flatten)]
    pub kind: ConnectionKind,
    #[serde(default)]
    pub marks: MarkDistribution,
    #[serde(default = "default_dimension")]
    pub dimension: usize,
}

fn default_dimension() -> usize {
    2
}

impl ModelSpec {
    pub fn build(&self) -> rcmlab_core::Result<ConnectionModel> {
        ConnectionModel::new(self.kind.clone(), self.marks.clone(), self.dimension)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowSpec {
    /// Cube `[0, side]^d`; alternative to explicit corners.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub side: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lower: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub upper: Option<Vec<f64>>,
    #[serde(default)]
    pub boundary: BoundaryMode,
}

impl WindowSpec {
    pub fn build(&self, dimension: usize) -> anyhow::Result<Window> {
        let w = match (self.side, &self.lower, &self.upper) {
            (Some(side), None, None) => Window::cube(dimension, side, self.boundary)?,
            (None, Some(lo), Some(hi)) => Window::new(lo.clone(), hi.clone(), self.boundary)?,
            _ => bail!("window needs either `side` or both `lower` and `upper`"),
        };
        if w.dimension() != dimension {
            bail!("window dimension {} differs from model dimension {dimension}", w.dimension());
        }
        Ok(w)
    }
}

/// One experiment, read from a JSON or TOML file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: Kind,
    pub model: ModelSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<WindowSpec>,
    /// Window sides for the uniqueness probe.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sides: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_grid: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t0: Option<f64>,
    #[serde(default = "default_reps")]
    pub reps: usize,
    #[serde(default)]
    pub limits: ExplorationLimits,
    #[serde(default)]
    pub quadrature: QuadratureSpec,
    #[serde(default)]
    pub caps: ResourceCaps,
    /// Largest cluster size reported individually.
    #[serde(default = "default_max_size")]
    pub max_size: usize,
    /// Absolute step of central differences.
    #[serde(default = "default_step")]
    pub step: f64,
    /// Shell width for boundary couplings; defaults to the range bound.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shell: Option<f64>,
    /// Mark grid cells for continuous mark laws.
    #[serde(default = "default_cells")]
    pub cells: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
}

fn default_reps() -> usize {
    1000
}

fn default_max_size() -> usize {
    10
}

fn default_step() -> f64 {
    0.05
}

fn default_cells() -> usize {
    32
}

pub fn load(path: &Path) -> anyhow::Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse(&text, path.extension().and_then(|e| e.to_str()).unwrap_or(""))
}

pub fn parse(text: &str, extension: &str) -> anyhow::Result<ExperimentConfig> {
    match extension {
        "toml" => toml::from_str(text).map_err(|e| anyhow!("invalid TOML config: {e}")),
        "json" => serde_json::from_str(text).map_err(|e| anyhow!("invalid JSON config: {e}")),
        other => bail!("unsupported config extension `{other}` (expected .json or .toml)"),
    }
}

impl ExperimentConfig {
    /// Hex SHA-256 of the canonical JSON form, truncated to 16 digits.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("config serializes");
        let digest = Sha256::digest(&canonical);
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    pub fn require_t(&self) -> anyhow::Result<f64> {
        self.t.ok_or_else(|| anyhow!("`t` is required for kind {:?}", self.kind))
    }

    pub fn require_t0(&self) -> anyhow::Result<f64> {
        self.t0.ok_or_else(|| anyhow!("`t0` is required for kind {:?}", self.kind))
    }

    pub fn require_grid(&self) -> anyhow::Result<&[f64]> {
        self.t_grid.as_deref().ok_or_else(|| anyhow!("`t_grid` is required for kind {:?}", self.kind))
    }

    pub fn require_window(&self) -> anyhow::Result<Window> {
        self.window
            .as_ref()
            .ok_or_else(|| anyhow!("`window` is required for kind {:?}", self.kind))?
            .build(self.model.dimension)
    }

    pub fn shell_width(&self, model: &ConnectionModel) -> f64 {
        self.shell.unwrap_or_else(|| model.range_bound())
    }

    /// Every problem found without running anything.
    pub fn diagnostics(&self) -> Vec<String> {
        let mut out = Vec::new();
        let model = match self.model.build() {
            Ok(m) => Some(m),
            Err(e) => {
                out.push(format!("model: {e}"));
                None
            }
        };
        if let Some(m) = &model {
            if let Err(e) = m.envelope() {
                out.push(format!("model: {e}"));
            }
        }
        let intensities = self.t.iter().chain(self.t0.iter()).chain(self.t_grid.iter().flatten());
        for &t in intensities {
            if !t.is_finite() || t < 0.0 {
                out.push(format!("intensity: {t} is negative or not finite"));
            }
        }
        if let Some(grid) = &self.t_grid {
            if grid.windows(2).any(|w| !(w[1] > w[0])) {
                out.push("t_grid: must be strictly increasing".into());
            }
        }
        if self.reps == 0 {
            out.push("reps: must be positive".into());
        }
        if let Err(e) = self.limits.validate() {
            out.push(format!("limits: {e}"));
        }
        let needs_t = matches!(
            self.kind,
            Kind::Simulate | Kind::Explore | Kind::ReweightCheck | Kind::DerivativeCheck | Kind::UniquenessProbe
        );
        if needs_t && self.t.is_none() {
            out.push(format!("t: required for kind {:?}", self.kind));
        }
        if matches!(self.kind, Kind::Sweep | Kind::Convexity) {
            match &self.t_grid {
                None => out.push(format!("t_grid: required for kind {:?}", self.kind)),
                Some(g) if self.kind == Kind::Convexity && g.len() < 3 => {
                    out.push("t_grid: convexity needs at least three points".into())
                }
                _ => {}
            }
        }
        if self.kind == Kind::ReweightCheck && self.t0.is_none() {
            out.push("t0: required for kind ReweightCheck".into());
        }
        if let (Some(t), Some(t0)) = (self.t, self.t0) {
            if self.kind == Kind::UniquenessProbe && t > t0 {
                out.push(format!("t0: coupling needs t <= t0, got t = {t} > t0 = {t0}"));
            }
        }
        if self.kind == Kind::UniquenessProbe && self.sides.as_ref().map_or(true, |s| s.is_empty()) {
            out.push("sides: required for kind UniquenessProbe".into());
        }
        if self.kind == Kind::DerivativeCheck {
            if let Some(t) = self.t {
                if !(self.step > 0.0) || t - self.step < 0.0 {
                    out.push(format!("step: {} must be positive and at most t", self.step));
                }
            }
        }
        if self.kind == Kind::Simulate && self.window.is_none() {
            out.push("window: required for kind Simulate".into());
        }
        if let (Some(spec), Some(m)) = (&self.window, &model) {
            match spec.build(self.model.dimension) {
                Err(e) => out.push(format!("window: {e}")),
                Ok(w) => {
                    if w.mode() == BoundaryMode::Torus {
                        if let Err(e) = w.check_range(m.range_bound()) {
                            out.push(format!("window: {e}"));
                        }
                    }
                    let top = self.t.iter().chain(self.t0.iter()).chain(self.t_grid.iter().flatten()).fold(0.0, |a: f64, b| a.max(*b));
                    let expected = top * w.volume();
                    if expected > self.caps.max_expected_points {
                        out.push(format!(
                            "caps: expected point count {expected:.3e} exceeds max_expected_points {:.3e}",
                            self.caps.max_expected_points
                        ));
                    }
                }
            }
        }
        if let (Some(shell), Some(m)) = (self.shell, &model) {
            if shell < m.range_bound() {
                out.push(format!("shell: width {shell} is smaller than the range bound {}", m.range_bound()));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const GILBERT: &str = r#"
kind = "simulate"
t = 1.0
reps = 3
seed = 5

[model]
name = "gilbert"
marks = { kind = "point-mass", value = 0.5 }

[window]
side = 10.0
boundary = "torus"
"#;

    #[test]
    fn toml_round_trip_keeps_hash() {
        let c = parse(GILBERT, "toml").unwrap();
        assert!(c.diagnostics().is_empty(), "{:?}", c.diagnostics());
        let echoed = serde_json::to_string(&c).unwrap();
        let back = parse(&echoed, "json").unwrap();
        assert_eq!(back, c);
        assert_eq!(back.hash(), c.hash());
    }

    #[test]
    fn named_violations() {
        let small = GILBERT.replace("side = 10.0", "side = 1.5").replace("t = 1.0", "t = -1.0");
        let d = parse(&small, "toml").unwrap().diagnostics();
        assert!(d.iter().any(|m| m.starts_with("window:") && m.contains("torus")), "{d:?}");
        assert!(d.iter().any(|m| m.starts_with("intensity:")), "{d:?}");
        assert!(parse("kind = \"nope\"", "toml").is_err());
        assert!(parse("{}", "yaml").is_err());
    }
}
