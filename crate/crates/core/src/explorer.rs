//! Generation-by-generation sampling of the cluster of a vertex added at the
//! origin.
//!
//! Given the explored vertices `μ = C_{≤n−1}` and the frontier `μ′ = C_n`,
//! the next generation is a Poisson process with intensity
//! `t · φ̄(μ, x) · φ(μ′, x) dx Q(dq)`, where `φ̄(μ, x) = ∏_{z∈μ} (1 − φ(x − z))`
//! and `φ(μ′, x) = 1 − φ̄(μ′, x)`. It is sampled by thinning: every frontier
//! vertex emits candidates from `t · h(‖x − y‖) dx` with `h` the model's
//! envelope, and a candidate is kept with probability
//! `φ̄(μ, x) φ(μ′, x) / Σ_{y∈μ′} h(‖x − y‖)`.
//!
//! Edges from a new vertex to the frontier are Bernoulli(φ) conditioned on at
//! least one success; edges among new vertices are unconditional.

use std::collections::HashMap;
use std::ops::Range;

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{RcmError, Result};
use crate::estimate::Estimate;
use crate::geometry::{BoundaryMode, Window};
use crate::model::{ConnectionModel, Envelope};
use crate::parallel::try_replicate;
use crate::phi_lambda::{phi_lambda, Members, PhiLambda, QuadratureSpec};
use crate::rng::RngStream;
use crate::sampling::{check_intensity, sample_poisson, ResourceCaps};
use crate::unionfind::DisjointSets;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExplorationLimits {
    pub max_generations: usize,
    pub max_vertices: usize,
    /// Cap on the candidate count drawn for a single generation.
    pub max_candidates: usize,
}

impl Default for ExplorationLimits {
    fn default() -> Self {
        Self { max_generations: 10_000, max_vertices: 100_000, max_candidates: 10_000_000 }
    }
}

impl ExplorationLimits {
    pub fn with_max_vertices(max_vertices: usize) -> Self {
        Self { max_vertices, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_generations == 0 || self.max_vertices == 0 || self.max_candidates == 0 {
            return Err(RcmError::InvalidLimits(format!("all limits must be positive: {self:?}")));
        }
        Ok(())
    }
}

/// One explored cluster. Vertices are stored generation by generation, so
/// generation `n` occupies a contiguous index range; the root is index 0 at
/// the origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterSample {
    dimension: usize,
    locations: Vec<f64>,
    marks: Vec<f64>,
    generation_starts: Vec<usize>,
    edges: Vec<(u32, u32)>,
    truncated: bool,
    phi_lambda: Option<PhiLambda>,
}

impl ClusterSample {
    fn root(dimension: usize, mark: f64) -> Self {
        Self {
            dimension,
            locations: vec![0.0; dimension],
            marks: vec![mark],
            generation_starts: vec![0, 1],
            edges: Vec::new(),
            truncated: false,
            phi_lambda: None,
        }
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn size(&self) -> usize {
        self.marks.len()
    }

    pub fn root_mark(&self) -> f64 {
        self.marks[0]
    }

    /// Number of nonempty generations after the root.
    pub fn generation_count(&self) -> usize {
        self.generation_starts.len() - 2
    }

    pub fn generation(&self, n: usize) -> Range<usize> {
        self.generation_starts[n]..self.generation_starts[n + 1]
    }

    pub fn generation_sizes(&self) -> Vec<usize> {
        self.generation_starts.windows(2).map(|w| w[1] - w[0]).collect()
    }

    pub fn location(&self, i: usize) -> &[f64] {
        &self.locations[i * self.dimension..(i + 1) * self.dimension]
    }

    pub fn marks(&self) -> &[f64] {
        &self.marks
    }

    pub fn edges(&self) -> &[(u32, u32)] {
        &self.edges
    }

    pub fn is_truncated(&self) -> bool {
        self.truncated
    }

    pub fn phi_lambda(&self) -> Option<PhiLambda> {
        self.phi_lambda
    }

    pub fn members(&self) -> Members<'_> {
        Members { dimension: self.dimension, locations: &self.locations, marks: &self.marks }
    }

    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.size()];
        for &(a, b) in &self.edges {
            adj[a as usize].push(b as usize);
            adj[b as usize].push(a as usize);
        }
        adj
    }

    /// Graph distance from the root for every vertex (`usize::MAX` if unreachable).
    pub fn root_distances(&self) -> Vec<usize> {
        let adj = self.adjacency();
        let mut dist = vec![usize::MAX; self.size()];
        let mut queue = std::collections::VecDeque::from([0usize]);
        dist[0] = 0;
        while let Some(v) = queue.pop_front() {
            for &w in &adj[v] {
                if dist[w] == usize::MAX {
                    dist[w] = dist[v] + 1;
                    queue.push_back(w);
                }
            }
        }
        dist
    }

    /// Number of components left after deleting the root.
    pub fn root_split_count(&self) -> usize {
        let n = self.size();
        if n <= 1 {
            return 0;
        }
        let mut sets = DisjointSets::new(n);
        for &(a, b) in &self.edges {
            if a != 0 && b != 0 {
                sets.union(a as usize, b as usize);
            }
        }
        sets.component_count() - 1
    }

    /// Compute and store `φ_λ` (unit intensity). Truncated clusters are rejected.
    pub fn compute_phi_lambda<R: Rng + ?Sized>(
        &mut self,
        model: &ConnectionModel,
        spec: &QuadratureSpec,
        rng: &mut R,
    ) -> Result<PhiLambda> {
        let v = phi_lambda_of_cluster(self, model, spec, rng)?;
        self.phi_lambda = Some(v);
        Ok(v)
    }
}

/// `φ_λ(C)` per unit intensity for a finite explored cluster.
pub fn phi_lambda_of_cluster<R: Rng + ?Sized>(
    cluster: &ClusterSample,
    model: &ConnectionModel,
    spec: &QuadratureSpec,
    rng: &mut R,
) -> Result<PhiLambda> {
    if cluster.truncated {
        return Err(RcmError::InvalidArgument("phi_lambda needs a finite (non-truncated) cluster".into()));
    }
    phi_lambda(cluster.members(), model, spec, rng)
}

/// Bucket index for spatial lookups around candidates.
struct Buckets {
    cell: f64,
    dimension: usize,
    map: HashMap<Vec<i64>, Vec<u32>>,
}

impl Buckets {
    fn new(cell: f64, dimension: usize) -> Self {
        Self { cell, dimension, map: HashMap::new() }
    }

    fn key(&self, x: &[f64]) -> Vec<i64> {
        x.iter().map(|v| (v / self.cell).floor() as i64).collect()
    }

    fn insert(&mut self, x: &[f64], id: u32) {
        let k = self.key(x);
        self.map.entry(k).or_default().push(id);
    }

    fn near(&self, x: &[f64], out: &mut Vec<u32>) {
        out.clear();
        let base = self.key(x);
        let d = self.dimension;
        let mut offset = vec![-1i64; d];
        let mut key = base.clone();
        loop {
            for a in 0..d {
                key[a] = base[a] + offset[a];
            }
            if let Some(v) = self.map.get(&key) {
                out.extend_from_slice(v);
            }
            let mut a = 0;
            loop {
                if a == d {
                    return;
                }
                offset[a] += 1;
                if offset[a] <= 1 {
                    break;
                }
                offset[a] = -1;
                a += 1;
            }
        }
    }
}

/// Spatial lookup used during exploration: bucketed for finite range in low
/// dimension, exhaustive otherwise.
enum Lookup {
    Buckets(Buckets),
    All(usize),
}

impl Lookup {
    fn candidates(&self, x: &[f64], out: &mut Vec<u32>) {
        match self {
            Lookup::Buckets(b) => b.near(x, out),
            Lookup::All(n) => {
                out.clear();
                out.extend(0..*n as u32);
            }
        }
    }

    fn insert(&mut self, x: &[f64], id: u32) {
        match self {
            Lookup::Buckets(b) => b.insert(x, id),
            Lookup::All(n) => *n = (*n).max(id as usize + 1),
        }
    }
}

struct Explorer<'a> {
    model: &'a ConnectionModel,
    envelope: Envelope,
    d: usize,
    cluster: ClusterSample,
    lookup: Lookup,
}

impl Explorer<'_> {
    fn phi_to(&self, x: &[f64], q: f64, j: usize) -> f64 {
        let y = self.cluster.location(j);
        let r2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
        self.model.phi_radial(r2.sqrt(), self.cluster.marks[j], q)
    }

    fn env_to(&self, x: &[f64], j: usize) -> f64 {
        let y = self.cluster.location(j);
        let r2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
        self.envelope.value(r2.sqrt(), self.d)
    }
}

/// Explore the cluster of a vertex at the origin with mark `root_mark`.
pub fn explore_cluster<R: Rng + ?Sized>(
    root_mark: f64,
    t: f64,
    model: &ConnectionModel,
    limits: &ExplorationLimits,
    rng: &mut R,
) -> Result<ClusterSample> {
    check_intensity(t)?;
    limits.validate()?;
    let d = model.dimension();
    let envelope = model.envelope()?;
    let range = model.range_bound();
    let lookup = if range.is_finite() && d <= 4 {
        Lookup::Buckets(Buckets::new(range.max(f64::MIN_POSITIVE), d))
    } else {
        Lookup::All(0)
    };
    let mut ex = Explorer { model, envelope, d, cluster: ClusterSample::root(d, root_mark), lookup };
    ex.lookup.insert(&vec![0.0; d], 0);
    if t == 0.0 {
        return Ok(ex.cluster);
    }
    let per_vertex_mass = t * envelope.mass(d);
    let mut near = Vec::new();
    let mut disp = vec![0.0; d];
    let mut x = vec![0.0; d];
    let mut frontier_phi: Vec<(u32, f64)> = Vec::new();
    loop {
        let n = ex.cluster.generation_starts.len() - 2;
        let front = ex.cluster.generation(n);
        if front.is_empty() {
            ex.cluster.generation_starts.pop();
            break;
        }
        if n >= limits.max_generations {
            ex.cluster.truncated = true;
            break;
        }
        let total_mean = per_vertex_mass * front.len() as f64;
        if total_mean > limits.max_candidates as f64 {
            ex.cluster.truncated = true;
            break;
        }
        let total = if total_mean > 0.0 {
            Poisson::new(total_mean)
                .map_err(|e| RcmError::InvalidArgument(e.to_string()))?
                .sample(rng) as usize
        } else {
            0
        };
        if total > limits.max_candidates {
            ex.cluster.truncated = true;
            break;
        }
        // new vertices: location, mark and conditioned frontier edges
        let mut born: Vec<(Vec<f64>, f64, Vec<u32>)> = Vec::new();
        for _ in 0..total {
            let parent = front.start + rng.gen_range(0..front.len());
            envelope.sample_displacement(rng, d, &mut disp);
            let y = ex.cluster.location(parent);
            for a in 0..d {
                x[a] = y[a] + disp[a];
            }
            let q = model.marks().sample(rng);
            ex.lookup.candidates(&x, &mut near);
            let mut env_sum = 0.0;
            let mut old_survival = 1.0;
            let mut front_survival = 1.0;
            frontier_phi.clear();
            for &j in &near {
                let j = j as usize;
                if front.contains(&j) {
                    env_sum += ex.env_to(&x, j);
                    let f = ex.phi_to(&x, q, j);
                    if f > 0.0 {
                        front_survival *= 1.0 - f;
                        frontier_phi.push((j as u32, f));
                    }
                } else if j < front.start {
                    old_survival *= 1.0 - ex.phi_to(&x, q, j);
                }
            }
            if env_sum <= 0.0 || frontier_phi.is_empty() {
                continue;
            }
            let accept = acceptance_probability(old_survival, front_survival, env_sum);
            debug_assert!(accept <= 1.0 + 1e-9, "envelope does not dominate: {accept}");
            if rng.gen::<f64>() >= accept {
                continue;
            }
            let links = conditioned_links(&frontier_phi, rng);
            born.push((x.clone(), q, links));
        }
        let start = ex.cluster.size();
        for (k, (loc, q, links)) in born.iter().enumerate() {
            let id = (start + k) as u32;
            ex.cluster.locations.extend_from_slice(loc);
            ex.cluster.marks.push(*q);
            for &j in links {
                ex.cluster.edges.push((j, id));
            }
        }
        // unconditional edges among the newborn
        for a in 0..born.len() {
            for b in a + 1..born.len() {
                let r2: f64 = born[a].0.iter().zip(&born[b].0).map(|(u, v)| (u - v) * (u - v)).sum();
                let f = model.phi_radial(r2.sqrt(), born[a].1, born[b].1);
                if f > 0.0 && rng.gen::<f64>() < f {
                    ex.cluster.edges.push(((start + a) as u32, (start + b) as u32));
                }
            }
        }
        for (k, (loc, _, _)) in born.iter().enumerate() {
            ex.lookup.insert(loc, (start + k) as u32);
        }
        ex.cluster.generation_starts.push(ex.cluster.size());
        if ex.cluster.size() > limits.max_vertices {
            ex.cluster.truncated = true;
            break;
        }
    }
    Ok(ex.cluster)
}

/// Thinning probability of a candidate drawn from the summed frontier
/// envelopes: it must attach to the frontier and avoid all older vertices.
#[inline]
fn acceptance_probability(old_survival: f64, front_survival: f64, env_sum: f64) -> f64 {
    old_survival * (1.0 - front_survival) / env_sum
}

/// Bernoulli(φ_k) edge indicators conditioned on at least one success,
/// sampled sequentially: the first success is drawn from its exact
/// conditional law, later indicators are independent.
fn conditioned_links<R: Rng + ?Sized>(phis: &[(u32, f64)], rng: &mut R) -> Vec<u32> {
    let m = phis.len();
    // suffix[k] = P(at least one success among k..m)
    let mut suffix = vec![0.0; m + 1];
    let mut surv = 1.0;
    for k in (0..m).rev() {
        surv *= 1.0 - phis[k].1;
        suffix[k] = 1.0 - surv;
    }
    let mut links = Vec::new();
    let mut found = false;
    for (k, &(j, f)) in phis.iter().enumerate() {
        let p = if found { f } else { f / suffix[k] };
        if p >= 1.0 || rng.gen::<f64>() < p {
            links.push(j);
            found = true;
        }
    }
    links
}

/// Explore the cluster of a typical vertex (mark drawn from `Q`).
pub fn explore_typical<R: Rng + ?Sized>(
    t: f64,
    model: &ConnectionModel,
    limits: &ExplorationLimits,
    rng: &mut R,
) -> Result<ClusterSample> {
    let p = model.marks().sample(rng);
    explore_cluster(p, t, model, limits, rng)
}

/// Largest cluster size tracked individually; larger sizes share the last bin.
pub const CONSISTENCY_BINS: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyReport {
    /// `P(min(|C|, 20) = k)` for `k = 1..=20`.
    pub explorer_pmf: Vec<f64>,
    pub window_pmf: Vec<f64>,
    pub total_variation: f64,
    /// `½ Σ_k sqrt(p̂_k (1 − p̂_k) (1/n₁ + 1/n₂))` with the pooled `p̂_k`.
    pub pooled_noise: f64,
    pub z_scores: Vec<f64>,
    /// Whether the window is large enough for the generation limit.
    pub window_adequate: bool,
    pub explorer_truncated: usize,
}

impl ConsistencyReport {
    pub fn passes(&self, k: f64) -> bool {
        self.total_variation <= k * self.pooled_noise
    }
}

fn binned(size: usize) -> usize {
    size.clamp(1, CONSISTENCY_BINS) - 1
}

/// Compare cluster sizes from the explorer with those of a vertex added at
/// the centre of a full window simulation.
#[allow(clippy::too_many_arguments)]
pub fn explorer_vs_window_consistency(
    model: &ConnectionModel,
    t: f64,
    root_mark: f64,
    window: &Window,
    limits: &ExplorationLimits,
    reps: usize,
    caps: &ResourceCaps,
    stream: &RngStream,
) -> Result<ConsistencyReport> {
    let window = window.with_mode(BoundaryMode::Free);
    let range = model.range_bound();
    let window_adequate = range.is_finite() && window.min_side() >= 2.0 * limits.max_generations as f64 * range
        || window.min_side() >= 2.0 * CONSISTENCY_BINS as f64 * range;
    let explorer_stream = stream.labelled("explorer");
    let window_stream = stream.labelled("window");
    let explored = try_replicate(reps, &explorer_stream, |_, s| {
        let c = explore_cluster(root_mark, t, model, limits, &mut s.rng())?;
        Ok((binned(c.size()), c.is_truncated()))
    })?;
    let centre = window.center();
    let windowed = try_replicate(reps, &window_stream, |_, s| {
        let mut rng = s.rng();
        let mut config = sample_poisson(&window, t, model.marks(), caps, &mut rng)?;
        config.push(&centre, root_mark)?;
        let g = crate::graph::build_graph(&config, model, caps, &mut rng)?;
        Ok(binned(g.cluster_size(config.len() - 1)))
    })?;
    let mut e = vec![0.0; CONSISTENCY_BINS];
    let mut w = vec![0.0; CONSISTENCY_BINS];
    let mut truncated = 0;
    for &(b, tr) in &explored {
        e[b] += 1.0;
        truncated += tr as usize;
    }
    for &b in &windowed {
        w[b] += 1.0;
    }
    let n = reps.max(1) as f64;
    e.iter_mut().for_each(|v| *v /= n);
    w.iter_mut().for_each(|v| *v /= n);
    let mut tv = 0.0;
    let mut noise = 0.0;
    let mut z = Vec::with_capacity(CONSISTENCY_BINS);
    for k in 0..CONSISTENCY_BINS {
        let pooled = 0.5 * (e[k] + w[k]);
        let se = (pooled * (1.0 - pooled) * (2.0 / n)).sqrt();
        tv += 0.5 * (e[k] - w[k]).abs();
        noise += 0.5 * se;
        z.push(if se > 0.0 { (e[k] - w[k]) / se } else { 0.0 });
    }
    Ok(ConsistencyReport {
        explorer_pmf: e,
        window_pmf: w,
        total_variation: tv,
        pooled_noise: noise,
        z_scores: z,
        window_adequate,
        explorer_truncated: truncated,
    })
}

/// Mean of `|C| − 1` and of `t · φ_λ(C)` over explored clusters (finite ones).
pub fn mean_size_identity(
    model: &ConnectionModel,
    t: f64,
    limits: &ExplorationLimits,
    spec: &QuadratureSpec,
    reps: usize,
    stream: &RngStream,
) -> Result<(Estimate, Estimate)> {
    let rows = try_replicate(reps, stream, |_, s| {
        let mut rng = s.rng();
        let mut c = explore_typical(t, model, limits, &mut rng)?;
        if c.is_truncated() {
            return Ok(None);
        }
        let v = c.compute_phi_lambda(model, spec, &mut rng)?;
        Ok(Some(((c.size() - 1) as f64, t * v.value)))
    })?;
    let finite: Vec<(f64, f64)> = rows.into_iter().flatten().collect();
    Ok((
        Estimate::mean_of(finite.iter().map(|r| r.0)),
        Estimate::mean_of(finite.iter().map(|r| r.1)),
    ))
}
