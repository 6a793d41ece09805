//! Free / wired boundary couplings on a window with an outer shell, and the
//! per-vertex split statistics built on them.
//!
//! One configuration is sampled at intensity `t0` on the enlarged box; points
//! inside the inner box are thinned to intensity `t`. The free graph uses the
//! kept inner points only, the middle graph adds every shell point, and the
//! wired graph merges all shell points into one cluster. Edge uniforms are
//! shared, so `free ⊆ mid ⊆ wired` holds for every realization.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{RcmError, Result};
use crate::geometry::{BoundaryMode, Window};
use crate::graph::{build_graph_with, BoundaryCondition, GraphSample};
use crate::model::ConnectionModel;
use crate::rng::EdgeUniforms;
use crate::sampling::{check_intensity, sample_poisson, ResourceCaps};

/// Cluster counts of the three coupled graphs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryStats {
    /// Clusters of the free graph.
    pub m_free: usize,
    /// Clusters of the wired graph not attached to the shell.
    pub m_wired: usize,
    /// `Σ_{inner x} 1/|C(x)|` in the middle graph.
    pub m_mid: f64,
    pub inner_points: usize,
    pub shell_points: usize,
}

impl BoundaryStats {
    /// `m_wired ≤ m_mid ≤ m_free`, allowing only floating-point summation slack.
    pub fn sandwich_holds(&self) -> bool {
        let slack = 1e-9 * (self.inner_points.max(1) as f64);
        self.m_wired as f64 <= self.m_mid + slack && self.m_mid <= self.m_free as f64 + slack
    }
}

#[derive(Debug, Clone)]
pub struct CoupledGraphs {
    pub free: GraphSample,
    pub mid: GraphSample,
    pub wired: GraphSample,
    pub stats: BoundaryStats,
    pub inner: Window,
}

/// Sample the coupled free / middle / wired graphs on `inner ⊕ shell_width`.
#[allow(clippy::too_many_arguments)]
pub fn coupled_boundary_graphs<R: Rng + ?Sized>(
    inner: &Window,
    shell_width: f64,
    t: f64,
    t0: f64,
    model: &ConnectionModel,
    caps: &ResourceCaps,
    rng: &mut R,
) -> Result<CoupledGraphs> {
    check_intensity(t)?;
    check_intensity(t0)?;
    let range = model.range_bound();
    if !(shell_width >= range) {
        return Err(RcmError::ShellTooThin { width: shell_width, range });
    }
    if t > t0 {
        return Err(RcmError::IntensityAboveCoupling { t, t0 });
    }
    let inner = inner.with_mode(BoundaryMode::Free);
    let outer = inner.expanded(shell_width)?;
    let full = sample_poisson(&outer, t0, model.marks(), caps, rng)?;
    let keep_prob = if t0 > 0.0 { t / t0 } else { 1.0 };
    let mut mid_keep = Vec::with_capacity(full.len());
    let mut free_keep = Vec::new();
    let mut shell = Vec::with_capacity(full.len());
    for i in 0..full.len() {
        if inner.contains(full.location(i)) {
            if rng.gen::<f64>() < keep_prob {
                mid_keep.push(i);
                free_keep.push(i);
                shell.push(false);
            }
        } else {
            mid_keep.push(i);
            shell.push(true);
        }
    }
    let uniforms = EdgeUniforms::from_rng(rng);
    let mid_config = full.select(&mid_keep, t);
    let free_config = full.select(&free_keep, t).with_window(inner.clone());
    let mid = build_graph_with(&mid_config, model, &uniforms, caps, Some(shell))?;
    let free = build_graph_with(&free_config, model, &uniforms, caps, None)?.with_boundary(BoundaryCondition::Free);
    let wired = mid.wired();
    let stats = boundary_stats(&free, &mid, &wired);
    Ok(CoupledGraphs { free, mid, wired, stats, inner })
}

fn boundary_stats(free: &GraphSample, mid: &GraphSample, wired: &GraphSample) -> BoundaryStats {
    let inner_points = free.vertex_count();
    let shell_points = mid.vertex_count() - inner_points;
    let m_mid = mid.inner_indices().map(|i| 1.0 / mid.cluster_size(i) as f64).sum();
    let m_wired = (0..wired.vertex_count())
        .filter(|&i| wired.cluster_root(i) == i && !wired.touches_shell(i))
        .count();
    BoundaryStats { m_free: free.cluster_count(), m_wired, m_mid, inner_points, shell_points }
}

/// Split counts of a vertex: components left in its cluster after deleting
/// it (`n0`), how many of them reach the shell (`n_inf`), and
/// `n_plus = n0 − max(n_inf − 1, 0)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitCounts {
    pub n0: usize,
    pub n_plus: usize,
    pub n_inf: usize,
}

/// Split counts of the vertex with configuration id `id`.
pub fn vertex_split_counts(graph: &GraphSample, id: u64) -> Result<SplitCounts> {
    let v = graph.index_of(id).ok_or(RcmError::UnknownVertex(id))?;
    let n = graph.vertex_count();
    let mut label = vec![usize::MAX; n];
    label[v] = usize::MAX - 1;
    let mut stack = Vec::new();
    let mut n0 = 0;
    let mut n_inf = 0;
    for &start in graph.neighbors(v) {
        let start = start as usize;
        if label[start] != usize::MAX {
            continue;
        }
        let mut touches = false;
        label[start] = n0;
        stack.push(start);
        while let Some(u) = stack.pop() {
            touches |= graph.is_shell(u);
            for &w in graph.neighbors(u) {
                let w = w as usize;
                if label[w] == usize::MAX {
                    label[w] = n0;
                    stack.push(w);
                }
            }
        }
        n0 += 1;
        n_inf += touches as usize;
    }
    Ok(SplitCounts { n0, n_plus: n0 - n_inf.saturating_sub(1), n_inf })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeletionStability {
    /// Inner vertices whose removal leaves at least two shell-reaching components.
    pub count: usize,
    pub inner_vertices: usize,
    pub rate: f64,
}

/// Number of shell-reaching components left after deleting each vertex,
/// for every vertex at once (articulation-point DFS with subtree shell counts).
pub fn shell_split_profile(graph: &GraphSample) -> Vec<usize> {
    let n = graph.vertex_count();
    let shell_w: Vec<usize> = (0..n).map(|i| graph.is_shell(i) as usize).collect();
    let mut disc = vec![usize::MAX; n];
    let mut low = vec![0usize; n];
    let mut sub = vec![0usize; n];
    // shell vertices in each vertex's DFS tree and in its whole component
    let mut comp_shell = vec![0usize; n];
    let mut separated_shell = vec![0usize; n];
    let mut result = vec![0usize; n];
    let mut parent = vec![usize::MAX; n];
    let mut time = 0;
    for root in 0..n {
        if disc[root] != usize::MAX {
            continue;
        }
        let mut order = Vec::new();
        // (vertex, next neighbour position)
        let mut stack: Vec<(usize, usize)> = vec![(root, 0)];
        disc[root] = time;
        low[root] = time;
        time += 1;
        order.push(root);
        while let Some(top) = stack.len().checked_sub(1) {
            let (u, pos) = stack[top];
            let nb = graph.neighbors(u);
            if pos < nb.len() {
                let w = nb[pos] as usize;
                stack[top].1 += 1;
                if disc[w] == usize::MAX {
                    parent[w] = u;
                    disc[w] = time;
                    low[w] = time;
                    time += 1;
                    order.push(w);
                    stack.push((w, 0));
                } else if w != parent[u] {
                    low[u] = low[u].min(disc[w]);
                }
            } else {
                stack.pop();
                sub[u] += shell_w[u];
                if let Some(&(p, _)) = stack.last() {
                    low[p] = low[p].min(low[u]);
                    sub[p] += sub[u];
                    if low[u] >= disc[p] {
                        // subtree of u separates from the rest when p is deleted
                        separated_shell[p] += sub[u];
                        if sub[u] > 0 {
                            result[p] += 1;
                        }
                    }
                }
            }
        }
        let total = sub[root];
        for &u in &order {
            comp_shell[u] = total;
        }
    }
    for u in 0..n {
        if disc[u] == usize::MAX || parent[u] == usize::MAX {
            continue;
        }
        let rest = comp_shell[u] - separated_shell[u] - shell_w[u];
        if rest > 0 {
            result[u] += 1;
        }
    }
    result
}

/// Deletion-stability statistic over the inner vertices of a shelled graph.
pub fn deletion_stability_statistic(graph: &GraphSample) -> DeletionStability {
    let profile = shell_split_profile(graph);
    let inner: Vec<usize> = graph.inner_indices().collect();
    let count = inner.iter().filter(|&&i| profile[i] >= 2).count();
    let rate = if inner.is_empty() { 0.0 } else { count as f64 / inner.len() as f64 };
    DeletionStability { count, inner_vertices: inner.len(), rate }
}
