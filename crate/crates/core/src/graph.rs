//! Random connection model realizations on a point configuration.

use std::collections::{HashSet, VecDeque};
use std::io::Write;

use flate2::write::GzEncoder;
use flate2::Compression;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{RcmError, Result};
use crate::grid::CellGrid;
use crate::model::ConnectionModel;
use crate::rng::EdgeUniforms;
use crate::sampling::{PointConfiguration, ResourceCaps};
use crate::unionfind::DisjointSets;

/// Below this many points candidate pairs are enumerated exhaustively.
pub const BRUTE_FORCE_BELOW: usize = 2_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryCondition {
    #[default]
    Plain,
    Free,
    Wired,
}

/// An RCM realization: vertices, symmetric adjacency and the cluster forest.
///
/// Vertices are addressed by storage index `0..n`; the stable vertex ids of
/// the underlying configuration are available through [`GraphSample::id`].
#[derive(Debug, Clone)]
pub struct GraphSample {
    config: PointConfiguration,
    adjacency: Vec<Vec<u32>>,
    clusters: DisjointSets,
    shell: Vec<bool>,
    touches_shell: Vec<bool>,
    boundary: BoundaryCondition,
    edges: usize,
}

/// Check the model against the configuration's window.
pub fn validate_model_for_window(config: &PointConfiguration, model: &ConnectionModel) -> Result<()> {
    if model.dimension() != config.dimension() {
        return Err(RcmError::InvalidModel(format!(
            "model dimension {} differs from window dimension {}",
            model.dimension(),
            config.dimension()
        )));
    }
    let range = model.range_bound();
    if range.is_infinite() {
        model.envelope()?;
    }
    config.window().check_range(range)
}

/// Sample an RCM on `config`, drawing the edge-uniform key from `rng`.
pub fn build_graph<R: Rng + ?Sized>(
    config: &PointConfiguration,
    model: &ConnectionModel,
    caps: &ResourceCaps,
    rng: &mut R,
) -> Result<GraphSample> {
    let edges = EdgeUniforms::from_rng(rng);
    build_graph_with(config, model, &edges, caps, None)
}

/// Sample an RCM on `config` with explicit edge uniforms. `shell` marks the
/// vertices (by storage index) that belong to an outer shell.
pub fn build_graph_with(
    config: &PointConfiguration,
    model: &ConnectionModel,
    uniforms: &EdgeUniforms,
    caps: &ResourceCaps,
    shell: Option<Vec<bool>>,
) -> Result<GraphSample> {
    validate_model_for_window(config, model)?;
    let n = config.len();
    let d = config.dimension();
    let window = config.window();
    let range = model.range_bound();
    let ids = config.ids();
    let marks = config.marks();
    let mut adjacency: Vec<Vec<u32>> = vec![Vec::new(); n];
    let mut clusters = DisjointSets::new(n);
    let mut edge_count = 0usize;

    let mut consider = |i: usize, j: usize| {
        let dist2 = window.distance_sq(config.location(i), config.location(j));
        if dist2 > range * range {
            return;
        }
        let phi = model.phi_radial(dist2.sqrt(), marks[i], marks[j]);
        if phi > 0.0 && uniforms.uniform(ids[i], ids[j]) < phi {
            adjacency[i].push(j as u32);
            adjacency[j].push(i as u32);
            clusters.union(i, j);
            edge_count += 1;
        }
    };

    if range.is_infinite() || n < BRUTE_FORCE_BELOW {
        let pairs = (n as u64) * (n.saturating_sub(1) as u64) / 2;
        if range.is_infinite() && pairs > caps.max_pairs {
            return Err(RcmError::PairCapExceeded {
                pairs,
                cap: caps.max_pairs,
            });
        }
        for i in 0..n {
            for j in i + 1..n {
                consider(i, j);
            }
        }
    } else {
        let grid = CellGrid::new(window, config.coords(), range);
        grid.for_each_candidate_pair(d, &mut consider);
    }
    for a in adjacency.iter_mut() {
        a.sort_unstable();
    }
    let shell = shell.unwrap_or_else(|| vec![false; n]);
    if shell.len() != n {
        return Err(RcmError::InvalidArgument(format!("shell flags: {} for {n} vertices", shell.len())));
    }
    Ok(GraphSample::assemble(config.clone(), adjacency, clusters, shell, BoundaryCondition::Plain, edge_count))
}

impl GraphSample {
    pub(crate) fn assemble(
        config: PointConfiguration,
        adjacency: Vec<Vec<u32>>,
        mut clusters: DisjointSets,
        shell: Vec<bool>,
        boundary: BoundaryCondition,
        edges: usize,
    ) -> Self {
        let n = config.len();
        clusters.flatten();
        let mut touches_shell = vec![false; n];
        for i in 0..n {
            if shell[i] {
                touches_shell[clusters.find_const(i)] = true;
            }
        }
        GraphSample {
            config,
            adjacency,
            clusters,
            shell,
            touches_shell,
            boundary,
            edges,
        }
    }

    /// Same vertices and edges, with every shell vertex merged into one cluster.
    pub fn wired(&self) -> GraphSample {
        let mut clusters = self.clusters.clone();
        let mut first: Option<usize> = None;
        for (i, &s) in self.shell.iter().enumerate() {
            if s {
                match first {
                    None => first = Some(i),
                    Some(f) => {
                        clusters.union(f, i);
                    }
                }
            }
        }
        GraphSample::assemble(
            self.config.clone(),
            self.adjacency.clone(),
            clusters,
            self.shell.clone(),
            BoundaryCondition::Wired,
            self.edges,
        )
    }

    pub(crate) fn with_boundary(mut self, boundary: BoundaryCondition) -> Self {
        self.boundary = boundary;
        self
    }

    pub fn config(&self) -> &PointConfiguration {
        &self.config
    }

    pub fn boundary_condition(&self) -> BoundaryCondition {
        self.boundary
    }

    pub fn vertex_count(&self) -> usize {
        self.config.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges
    }

    pub fn id(&self, index: usize) -> u64 {
        self.config.ids()[index]
    }

    pub fn index_of(&self, id: u64) -> Option<usize> {
        self.config.index_of(id)
    }

    pub fn neighbors(&self, index: usize) -> &[u32] {
        &self.adjacency[index]
    }

    pub fn degree(&self, index: usize) -> usize {
        self.adjacency[index].len()
    }

    pub fn is_shell(&self, index: usize) -> bool {
        self.shell[index]
    }

    pub fn has_shell(&self) -> bool {
        self.shell.iter().any(|&s| s)
    }

    pub fn shell_flags(&self) -> &[bool] {
        &self.shell
    }

    pub fn inner_indices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.vertex_count()).filter(move |&i| !self.shell[i])
    }

    pub fn cluster_root(&self, index: usize) -> usize {
        self.clusters.find_const(index)
    }

    pub fn cluster_size(&self, index: usize) -> usize {
        self.clusters.set_size_const(index)
    }

    pub fn cluster_count(&self) -> usize {
        self.clusters.component_count()
    }

    /// Whether the cluster of `index` contains a shell vertex.
    pub fn touches_shell(&self, index: usize) -> bool {
        self.touches_shell[self.cluster_root(index)]
    }

    /// Iterate `(i, j)` with `i < j` over the edges, by storage index.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(i, nb)| nb.iter().filter(move |&&j| (j as usize) > i).map(move |&j| (i, j as usize)))
    }

    /// Edge set keyed by unordered vertex-id pairs.
    pub fn edge_ids(&self) -> HashSet<(u64, u64)> {
        self.edges()
            .map(|(i, j)| {
                let (a, b) = (self.id(i), self.id(j));
                (a.min(b), a.max(b))
            })
            .collect()
    }

    /// Component labels by breadth-first search on the materialized edges
    /// (ignores wired merging).
    pub fn bfs_components(&self) -> Vec<usize> {
        let n = self.vertex_count();
        let mut label = vec![usize::MAX; n];
        let mut queue = VecDeque::new();
        let mut next = 0;
        for s in 0..n {
            if label[s] != usize::MAX {
                continue;
            }
            label[s] = next;
            queue.push_back(s);
            while let Some(v) = queue.pop_front() {
                for &w in &self.adjacency[v] {
                    let w = w as usize;
                    if label[w] == usize::MAX {
                        label[w] = next;
                        queue.push_back(w);
                    }
                }
            }
            next += 1;
        }
        label
    }

    /// Vertices and edges of `self` are contained in `other`, and clusters of
    /// `self` are contained in clusters of `other`.
    pub fn is_subgraph_of(&self, other: &GraphSample) -> bool {
        let mut map = Vec::with_capacity(self.vertex_count());
        for i in 0..self.vertex_count() {
            match other.index_of(self.id(i)) {
                Some(j) => map.push(j),
                None => return false,
            }
        }
        for (i, j) in self.edges() {
            if other.adjacency[map[i]].binary_search(&(map[j] as u32)).is_err() {
                return false;
            }
        }
        (0..self.vertex_count()).all(|i| {
            let r = self.cluster_root(i);
            other.cluster_root(map[i]) == other.cluster_root(map[r])
        })
    }

    /// Write `id_i id_j` edge lines and `id x_1..x_d mark cluster_root` vertex
    /// lines, gzip-compressed when `gzip` is set.
    pub fn dump<W: Write>(&self, edges_out: W, vertices_out: W, gzip: bool) -> Result<()> {
        fn write_all<W: Write>(mut w: W, body: &str, gzip: bool) -> Result<()> {
            if gzip {
                let mut enc = GzEncoder::new(w, Compression::default());
                enc.write_all(body.as_bytes())?;
                enc.finish()?;
            } else {
                w.write_all(body.as_bytes())?;
            }
            Ok(())
        }
        let mut e = String::new();
        for (i, j) in self.edges() {
            e.push_str(&format!("{} {}\n", self.id(i), self.id(j)));
        }
        let mut v = String::new();
        for i in 0..self.vertex_count() {
            v.push_str(&self.id(i).to_string());
            for x in self.config.location(i) {
                v.push_str(&format!(" {x}"));
            }
            v.push_str(&format!(
                " {} {}\n",
                self.config.marks()[i],
                self.id(self.cluster_root(i))
            ));
        }
        write_all(edges_out, &e, gzip)?;
        write_all(vertices_out, &v, gzip)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{BoundaryMode, Window};
    use crate::marks::MarkDistribution;
    use crate::model::{constant, gilbert, ConnectionKind};
    use crate::rng::RngStream;
    use crate::sampling::sample_poisson;

    fn five_points() -> PointConfiguration {
        let w = Window::cube(2, 4.0, BoundaryMode::Free).unwrap();
        let pts: Vec<(Vec<f64>, f64)> = (0..5).map(|i| (vec![0.5 + 0.5 * i as f64, 1.0], 0.0)).collect();
        PointConfiguration::from_points(w, 1.0, &pts).unwrap()
    }

    #[test]
    fn zero_connection_is_edgeless() {
        let g = build_graph(&five_points(), &constant(2, 0.0, 5.0), &ResourceCaps::default(), &mut RngStream::new(1, 0).rng())
            .unwrap();
        assert_eq!(g.edge_count(), 0);
        assert_eq!(g.cluster_count(), 5);
        assert!((0..5).all(|i| g.cluster_size(i) == 1));
    }

    #[test]
    fn unit_connection_is_complete() {
        let g = build_graph(&five_points(), &constant(2, 1.0, 5.0), &ResourceCaps::default(), &mut RngStream::new(1, 0).rng())
            .unwrap();
        assert_eq!(g.edge_count(), 10);
        assert_eq!(g.cluster_count(), 1);
        assert_eq!(g.cluster_size(3), 5);
    }

    #[test]
    fn gilbert_indicator_distances() {
        let w = Window::cube(2, 4.0, BoundaryMode::Free).unwrap();
        let m = gilbert(2, 0.5);
        for seed in 0..50 {
            let near = PointConfiguration::from_points(w.clone(), 1.0, &[(vec![1.0, 1.0], 0.5), (vec![1.9, 1.0], 0.5)]).unwrap();
            let far = PointConfiguration::from_points(w.clone(), 1.0, &[(vec![1.0, 1.0], 0.5), (vec![2.1, 1.0], 0.5)]).unwrap();
            let mut rng = RngStream::new(seed, 0).rng();
            assert_eq!(build_graph(&near, &m, &ResourceCaps::default(), &mut rng).unwrap().edge_count(), 1);
            assert_eq!(build_graph(&far, &m, &ResourceCaps::default(), &mut rng).unwrap().edge_count(), 0);
        }
    }

    #[test]
    fn torus_too_small_rejected() {
        let w = Window::cube(2, 1.5, BoundaryMode::Torus).unwrap();
        let cfg = PointConfiguration::empty(w, 1.0);
        assert!(matches!(
            build_graph(&cfg, &gilbert(2, 0.5), &ResourceCaps::default(), &mut RngStream::new(1, 0).rng()),
            Err(RcmError::TorusTooSmall { .. })
        ));
    }

    #[test]
    fn unbounded_range_pair_cap() {
        let m = crate::model::ConnectionModel::new(
            ConnectionKind::Factorized {
                spatial: crate::model::SpatialFactor::Gaussian { sigma: 0.5 },
                kernel: crate::model::MarkKernel::Constant { value: 1.0 },
            },
            MarkDistribution::point(0.0),
            2,
        )
        .unwrap();
        let w = Window::cube(2, 10.0, BoundaryMode::Free).unwrap();
        let mut rng = RngStream::new(2, 0).rng();
        let cfg = sample_poisson(&w, 1.0, m.marks(), &ResourceCaps::default(), &mut rng).unwrap();
        let caps = ResourceCaps { max_pairs: 100, ..Default::default() };
        assert!(matches!(build_graph(&cfg, &m, &caps, &mut rng), Err(RcmError::PairCapExceeded { .. })));
        let g = build_graph(&cfg, &m, &ResourceCaps::default(), &mut rng).unwrap();
        assert!(g.edge_count() > 0);
    }

    #[test]
    fn grid_and_brute_force_agree() {
        // same uniforms, >= BRUTE_FORCE_BELOW points: compare against an all-pairs rebuild
        let w = Window::cube(2, 60.0, BoundaryMode::Torus).unwrap();
        let m = gilbert(2, 0.5);
        let mut rng = RngStream::new(3, 0).rng();
        let cfg = sample_poisson(&w, 1.0, m.marks(), &ResourceCaps::default(), &mut rng).unwrap();
        assert!(cfg.len() >= BRUTE_FORCE_BELOW);
        let u = EdgeUniforms::new(77);
        let g = build_graph_with(&cfg, &m, &u, &ResourceCaps::default(), None).unwrap();
        let mut expect = HashSet::new();
        for i in 0..cfg.len() {
            for j in i + 1..cfg.len() {
                let d2 = w.distance_sq(cfg.location(i), cfg.location(j));
                if d2 <= 1.0 && u.uniform(cfg.ids()[i], cfg.ids()[j]) < 1.0 {
                    expect.insert((cfg.ids()[i], cfg.ids()[j]));
                }
            }
        }
        assert_eq!(g.edge_ids(), expect);
    }

    #[test]
    fn union_find_matches_bfs() {
        let w = Window::cube(2, 30.0, BoundaryMode::Free).unwrap();
        let m = gilbert(2, 0.5);
        for s in 0..10 {
            let mut rng = RngStream::new(4, s).rng();
            let cfg = sample_poisson(&w, 1.2, m.marks(), &ResourceCaps::default(), &mut rng).unwrap();
            let g = build_graph(&cfg, &m, &ResourceCaps::default(), &mut rng).unwrap();
            let labels = g.bfs_components();
            for i in 0..g.vertex_count() {
                for j in (i + 1..g.vertex_count()).step_by(7) {
                    assert_eq!(labels[i] == labels[j], g.cluster_root(i) == g.cluster_root(j));
                }
                let size = labels.iter().filter(|&&l| l == labels[i]).count();
                assert_eq!(size, g.cluster_size(i));
            }
            for i in 0..g.vertex_count() {
                assert!(!g.neighbors(i).contains(&(i as u32)));
                for &j in g.neighbors(i) {
                    assert!(g.neighbors(j as usize).contains(&(i as u32)));
                }
            }
        }
    }

    #[test]
    fn dump_formats() {
        let g = build_graph(&five_points(), &constant(2, 1.0, 5.0), &ResourceCaps::default(), &mut RngStream::new(1, 0).rng())
            .unwrap();
        let mut e = Vec::new();
        let mut v = Vec::new();
        g.dump(&mut e, &mut v, false).unwrap();
        let e = String::from_utf8(e).unwrap();
        let v = String::from_utf8(v).unwrap();
        assert_eq!(e.lines().count(), 10);
        assert_eq!(v.lines().count(), 5);
        assert_eq!(v.lines().next().unwrap().split(' ').count(), 5);
        let mut gz = Vec::new();
        let mut gv = Vec::new();
        g.dump(&mut gz, &mut gv, true).unwrap();
        let mut dec = flate2::read::GzDecoder::new(&gz[..]);
        let mut s = String::new();
        std::io::Read::read_to_string(&mut dec, &mut s).unwrap();
        assert_eq!(s, e);
    }
}
