//! Joint coupling of spatially rescaled models.
//!
//! For a radially nonincreasing profile, each pair gets the weight
//! `W = ‖x_i − x_j‖ / φ̃⁻¹(Z_ij, p_i, p_j)` with `Z_ij` its edge uniform. The
//! graph `{W ≤ r}` has connection function `φ(x / r)`, and thresholds at
//! increasing `r` give nested graphs from a single set of weights.

use serde::{Deserialize, Serialize};

use crate::error::{RcmError, Result};
use crate::grid::CellGrid;
use crate::model::ConnectionModel;
use crate::rng::EdgeUniforms;
use crate::sampling::{PointConfiguration, ResourceCaps};
use crate::unionfind::DisjointSets;

/// Candidate pairs with their coupling weights, sorted by weight.
#[derive(Debug, Clone)]
pub struct CouplingWeights {
    vertices: usize,
    pairs: Vec<(u32, u32, f64)>,
}

impl CouplingWeights {
    /// Weights of every pair that can be an edge for some threshold `≤ max_scale`.
    pub fn new(
        config: &PointConfiguration,
        model: &ConnectionModel,
        uniforms: &EdgeUniforms,
        max_scale: f64,
        caps: &ResourceCaps,
    ) -> Result<Self> {
        if !model.is_radially_monotone() {
            return Err(RcmError::NotRadialMonotone(model.catalog_tag().into()));
        }
        if !(max_scale > 0.0) || !max_scale.is_finite() {
            return Err(RcmError::InvalidArgument(format!("scale must be positive, got {max_scale}")));
        }
        let n = config.len();
        let window = config.window();
        let reach = max_scale * model.range_bound();
        window.check_range(reach)?;
        let ids = config.ids();
        let marks = config.marks();
        let mut pairs = Vec::new();
        let mut err = None;
        let mut consider = |i: usize, j: usize| {
            let dist = window.distance_sq(config.location(i), config.location(j)).sqrt();
            if dist > reach {
                return;
            }
            let z = uniforms.uniform(ids[i], ids[j]);
            match model.radial_inverse(z, marks[i], marks[j]) {
                Ok(inv) => {
                    let w = if inv > 0.0 { dist / inv } else { f64::INFINITY };
                    if w <= max_scale {
                        pairs.push((i as u32, j as u32, w));
                    }
                }
                Err(e) => err = Some(e),
            }
        };
        if reach.is_infinite() || n < crate::graph::BRUTE_FORCE_BELOW {
            let total = (n as u64) * (n.saturating_sub(1) as u64) / 2;
            if reach.is_infinite() && total > caps.max_pairs {
                return Err(RcmError::PairCapExceeded { pairs: total, cap: caps.max_pairs });
            }
            for i in 0..n {
                for j in i + 1..n {
                    consider(i, j);
                }
            }
        } else {
            CellGrid::new(window, config.coords(), reach).for_each_candidate_pair(config.dimension(), &mut consider);
        }
        if let Some(e) = err {
            return Err(e);
        }
        pairs.sort_by(|a, b| a.2.total_cmp(&b.2).then(a.0.cmp(&b.0)).then(a.1.cmp(&b.1)));
        Ok(Self { vertices: n, pairs })
    }

    /// `(i, j, W_ij)` sorted by weight.
    pub fn pairs(&self) -> &[(u32, u32, f64)] {
        &self.pairs
    }

    /// Edges of the graph thresholded at `r`.
    pub fn edges_at(&self, r: f64) -> impl Iterator<Item = (usize, usize)> + '_ {
        let end = self.pairs.partition_point(|p| p.2 <= r);
        self.pairs[..end].iter().map(|&(i, j, _)| (i as usize, j as usize))
    }
}

/// Summary of one thresholded graph.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingLevel {
    pub scale: f64,
    pub edges: usize,
    pub clusters: usize,
    pub largest_cluster: usize,
}

/// Threshold one set of coupling weights at every scale in `scales`.
pub fn scaling_coupled_sweep(
    config: &PointConfiguration,
    model: &ConnectionModel,
    uniforms: &EdgeUniforms,
    scales: &[f64],
    caps: &ResourceCaps,
) -> Result<Vec<ScalingLevel>> {
    if scales.iter().any(|r| !(*r > 0.0)) {
        return Err(RcmError::InvalidArgument("scales must be positive".into()));
    }
    let max_scale = scales.iter().copied().fold(0.0, f64::max);
    if scales.is_empty() {
        return Ok(Vec::new());
    }
    let weights = CouplingWeights::new(config, model, uniforms, max_scale, caps)?;
    let mut order: Vec<usize> = (0..scales.len()).collect();
    order.sort_by(|&a, &b| scales[a].total_cmp(&scales[b]));
    let mut sets = DisjointSets::new(weights.vertices);
    let mut largest = usize::from(weights.vertices > 0);
    let mut next = 0;
    let mut out = vec![None; scales.len()];
    for k in order {
        let r = scales[k];
        while next < weights.pairs.len() && weights.pairs[next].2 <= r {
            let (i, j, _) = weights.pairs[next];
            sets.union(i as usize, j as usize);
            largest = largest.max(sets.set_size(i as usize));
            next += 1;
        }
        out[k] = Some(ScalingLevel { scale: r, edges: next, clusters: sets.component_count(), largest_cluster: largest });
    }
    Ok(out.into_iter().map(|l| l.expect("every scale visited")).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{BoundaryMode, Window};
    use crate::marks::MarkDistribution;
    use crate::model::{gilbert, ConnectionKind};
    use crate::rng::RngStream;
    use crate::sampling::sample_poisson;
    use std::collections::HashSet;

    fn setup() -> (PointConfiguration, ConnectionModel) {
        let w = Window::cube(2, 15.0, BoundaryMode::Torus).unwrap();
        let m = ConnectionModel::new(
            ConnectionKind::Boolean { scale: 2.0 },
            MarkDistribution::Discrete { atoms: vec![(0.3, 0.5), (0.5, 0.5)] },
            2,
        )
        .unwrap();
        let c = sample_poisson(&w, 1.0, m.marks(), &ResourceCaps::default(), &mut RngStream::new(51, 0).rng()).unwrap();
        (c, m)
    }

    #[test]
    fn thresholds_are_nested() {
        let (c, m) = setup();
        let w = CouplingWeights::new(&c, &m, &EdgeUniforms::new(3), 2.0, &ResourceCaps::default()).unwrap();
        let mut prev: HashSet<(usize, usize)> = HashSet::new();
        for r in [0.01, 0.3, 0.7, 1.0, 1.4, 2.0] {
            let now: HashSet<(usize, usize)> = w.edges_at(r).collect();
            assert!(prev.is_subset(&now));
            prev = now;
        }
        assert_eq!(w.edges_at(1e-9).count(), 0);
    }

    #[test]
    fn unit_scale_reproduces_graph() {
        let (c, m) = setup();
        let u = EdgeUniforms::new(9);
        let w = CouplingWeights::new(&c, &m, &u, 1.0, &ResourceCaps::default()).unwrap();
        let g = crate::graph::build_graph_with(&c, &m, &u, &ResourceCaps::default(), None).unwrap();
        let thresholded: HashSet<(usize, usize)> = w.edges_at(1.0).collect();
        let built: HashSet<(usize, usize)> = g.edges().collect();
        // equal except on the null set where Z_ij equals φ exactly
        assert_eq!(thresholded, built);
    }

    #[test]
    fn sweep_levels_monotone() {
        let (c, m) = setup();
        let levels =
            scaling_coupled_sweep(&c, &m, &EdgeUniforms::new(5), &[1.5, 0.5, 1.0], &ResourceCaps::default()).unwrap();
        assert_eq!(levels[1].scale, 0.5);
        assert!(levels[1].edges <= levels[2].edges && levels[2].edges <= levels[0].edges);
        assert!(levels[1].clusters >= levels[2].clusters);
    }

    #[test]
    fn rejects_non_monotone() {
        let (c, _) = setup();
        let m = ConnectionModel::new(
            ConnectionKind::Annulus { value: 1.0, inner: 0.5, outer: 1.0 },
            MarkDistribution::point(0.0),
            2,
        )
        .unwrap();
        assert!(matches!(
            scaling_coupled_sweep(&c, &m, &EdgeUniforms::new(5), &[1.0], &ResourceCaps::default()),
            Err(RcmError::NotRadialMonotone(_))
        ));
        let g = gilbert(2, 0.5);
        assert!(scaling_coupled_sweep(&c, &g, &EdgeUniforms::new(5), &[0.0], &ResourceCaps::default()).is_err());
    }
}
