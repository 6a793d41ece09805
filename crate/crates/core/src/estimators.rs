//! Estimators built on explored clusters and boundary-coupled window graphs:
//! percolation and cluster-density proxies, size distributions, intensity
//! reweighting, Margulis–Russo derivatives, convexity sweeps and the weight
//! measures of fixed-size clusters.

use serde::{Deserialize, Serialize};

use crate::boundary::{coupled_boundary_graphs, CoupledGraphs};
use crate::error::{RcmError, Result};
use crate::estimate::{Estimate, Tally};
use crate::explorer::{explore_typical, ExplorationLimits};
use crate::geometry::Window;
use crate::graph::GraphSample;
use crate::model::ConnectionModel;
use crate::parallel::try_replicate;
use crate::phi_lambda::QuadratureSpec;
use crate::rng::RngStream;
use crate::sampling::{check_intensity, ResourceCaps};

/// Summary of one explored typical cluster.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClusterRecord {
    pub size: usize,
    /// `φ_λ(C)` per unit intensity; `NaN` when not computed or truncated.
    pub phi_lambda: f64,
    /// Components left after removing the root.
    pub root_splits: usize,
    pub truncated: bool,
}

/// Explore `reps` typical clusters at intensity `t`; `φ_λ` is computed for
/// finite clusters when `spec` is given.
pub fn sample_cluster_records(
    t: f64,
    model: &ConnectionModel,
    limits: &ExplorationLimits,
    spec: Option<&QuadratureSpec>,
    reps: usize,
    stream: &RngStream,
) -> Result<Vec<ClusterRecord>> {
    check_intensity(t)?;
    try_replicate(reps, stream, |_, s| {
        let mut rng = s.rng();
        let mut c = explore_typical(t, model, limits, &mut rng)?;
        let phi = match spec {
            Some(spec) if !c.is_truncated() => c.compute_phi_lambda(model, spec, &mut rng)?.value,
            _ => f64::NAN,
        };
        Ok(ClusterRecord {
            size: c.size(),
            phi_lambda: phi,
            root_splits: c.root_split_count(),
            truncated: c.is_truncated(),
        })
    })
}

fn censored_fraction(records: &[ClusterRecord]) -> f64 {
    if records.is_empty() {
        return 0.0;
    }
    records.iter().filter(|r| r.truncated).count() as f64 / records.len() as f64
}

/// Fraction of explorations reaching the vertex cap: an upper proxy for the
/// percolation probability at the disclosed cutoff.
pub fn estimate_theta(
    t: f64,
    model: &ConnectionModel,
    limits: &ExplorationLimits,
    reps: usize,
    stream: &RngStream,
) -> Result<Estimate> {
    let records = sample_cluster_records(t, model, limits, None, reps, stream)?;
    Ok(theta_from_records(&records))
}

/// Truncated fraction of a batch of records.
pub fn theta_from_records(records: &[ClusterRecord]) -> Estimate {
    let e = Estimate::mean_of(records.iter().map(|r| r.truncated as u8 as f64));
    e.with_censored(censored_fraction(records))
}

/// `κ(t) = E[1/|C|]` from explored clusters; truncated clusters count as infinite.
pub fn estimate_kappa_explorer(
    t: f64,
    model: &ConnectionModel,
    limits: &ExplorationLimits,
    reps: usize,
    stream: &RngStream,
) -> Result<Estimate> {
    let records = sample_cluster_records(t, model, limits, None, reps, stream)?;
    Ok(kappa_from_records(&records))
}

/// Mean of `1/|C|` over a batch of records, truncated ones counting zero.
pub fn kappa_from_records(records: &[ClusterRecord]) -> Estimate {
    let e = Estimate::mean_of(records.iter().map(|r| if r.truncated { 0.0 } else { 1.0 / r.size as f64 }));
    e.with_censored(censored_fraction(records))
}

/// Per-realization window estimates of `t·κ(t)` from the three coupled graphs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KappaWindowSample {
    pub free: f64,
    pub mid: f64,
    pub wired: f64,
}

/// Window estimator of `t·κ(t)` for one coupled realization.
pub fn estimate_kappa_window(graphs: &CoupledGraphs) -> KappaWindowSample {
    let vol = graphs.inner.volume();
    KappaWindowSample {
        free: graphs.stats.m_free as f64 / vol,
        mid: graphs.stats.m_mid / vol,
        wired: graphs.stats.m_wired as f64 / vol,
    }
}

/// Finite clusters whose lexicographically smallest vertex lies in
/// `reference`, per unit volume of `reference`.
pub fn cluster_representative_count(graph: &GraphSample, reference: &Window) -> f64 {
    let n = graph.vertex_count();
    let config = graph.config();
    // lexicographically smallest member per cluster root
    let mut best: Vec<Option<usize>> = vec![None; n];
    for i in 0..n {
        let r = graph.cluster_root(i);
        let replace = match best[r] {
            None => true,
            Some(b) => {
                let (x, y) = (config.location(i), config.location(b));
                x.iter().zip(y).map(|(a, b)| a.total_cmp(b)).find(|o| o.is_ne()) == Some(std::cmp::Ordering::Less)
            }
        };
        if replace {
            best[r] = Some(i);
        }
    }
    let count = (0..n)
        .filter(|&r| graph.cluster_root(r) == r && !graph.touches_shell(r))
        .filter(|&r| best[r].is_some_and(|b| reference.contains(config.location(b))))
        .count();
    count as f64 / reference.volume()
}

/// Replicated window estimators of `t·κ(t)` (free, mid, wired, representative count).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KappaWindowEstimates {
    pub free: Estimate,
    pub mid: Estimate,
    pub wired: Estimate,
    pub representative: Estimate,
    /// Realizations where `wired ≤ mid ≤ free` failed (always zero).
    pub sandwich_failures: usize,
}

#[allow(clippy::too_many_arguments)]
pub fn kappa_window_estimates(
    t: f64,
    model: &ConnectionModel,
    window: &Window,
    shell_width: f64,
    reference_margin: f64,
    caps: &ResourceCaps,
    reps: usize,
    stream: &RngStream,
) -> Result<KappaWindowEstimates> {
    let reference = window.shrunk(reference_margin)?;
    let rows = try_replicate(reps, stream, |_, s| {
        let g = coupled_boundary_graphs(window, shell_width, t, t, model, caps, &mut s.rng())?;
        let k = estimate_kappa_window(&g);
        Ok((k, cluster_representative_count(&g.mid, &reference), g.stats.sandwich_holds()))
    })?;
    Ok(KappaWindowEstimates {
        free: Estimate::mean_of(rows.iter().map(|r| r.0.free)),
        mid: Estimate::mean_of(rows.iter().map(|r| r.0.mid)),
        wired: Estimate::mean_of(rows.iter().map(|r| r.0.wired)),
        representative: Estimate::mean_of(rows.iter().map(|r| r.1)),
        sandwich_failures: rows.iter().filter(|r| !r.2).count(),
    })
}

/// Empirical cluster-size distribution `p_1..p_{n_max}` of the typical vertex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizePmf {
    pub bins: Vec<Estimate>,
    /// Mass of sizes above `n_max` (including truncated explorations).
    pub tail: Estimate,
}

pub fn cluster_size_pmf(
    t: f64,
    model: &ConnectionModel,
    limits: &ExplorationLimits,
    reps: usize,
    n_max: usize,
    stream: &RngStream,
) -> Result<SizePmf> {
    let records = sample_cluster_records(t, model, limits, None, reps, stream)?;
    Ok(size_pmf_from(&records, n_max))
}

pub fn size_pmf_from(records: &[ClusterRecord], n_max: usize) -> SizePmf {
    let bins = (1..=n_max)
        .map(|n| Estimate::mean_of(records.iter().map(|r| (!r.truncated && r.size == n) as u8 as f64)))
        .collect();
    let tail = Estimate::mean_of(records.iter().map(|r| (r.truncated || r.size > n_max) as u8 as f64))
        .with_censored(censored_fraction(records));
    SizePmf { bins, tail }
}

/// Functions of the cluster size used as estimator payloads.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Payload {
    /// `f ≡ 1`
    One,
    /// `f(n) = 1{n = size}`
    SizeIs { size: usize },
    /// `f(n) = 1/n`
    InverseSize,
    /// `f(n) = n^(−exponent)`
    PowerDecay { exponent: f64 },
}

impl Payload {
    pub fn value(&self, n: usize) -> f64 {
        match *self {
            Payload::One => 1.0,
            Payload::SizeIs { size } => (n == size) as u8 as f64,
            Payload::InverseSize => 1.0 / n as f64,
            Payload::PowerDecay { exponent } => (n as f64).powf(-exponent),
        }
    }

    /// Whether `f(n)·sqrt(n log n) → 0`.
    pub fn decays_fast_enough(&self) -> bool {
        match *self {
            Payload::One => false,
            Payload::SizeIs { .. } | Payload::InverseSize => true,
            Payload::PowerDecay { exponent } => exponent > 0.5,
        }
    }
}

/// One explored cluster viewed under a target intensity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightedSample {
    pub size: usize,
    pub phi_lambda: f64,
    /// `(t/t0)^(n−1) · exp((t0 − t) φ_λ)`
    pub weight: f64,
    pub payload: f64,
    /// `n − 1 − t0 φ_λ`
    pub m_t: f64,
}

/// Change-of-measure weight of a finite cluster sampled at `t0`, for target `t`.
pub fn change_of_measure_weight(size: usize, phi_lambda: f64, t0: f64, t: f64) -> f64 {
    ((size as f64 - 1.0) * (t / t0).ln() + (t0 - t) * phi_lambda).exp()
}

pub fn weighted_sample(record: &ClusterRecord, t0: f64, t: f64, payload: &Payload) -> WeightedSample {
    WeightedSample {
        size: record.size,
        phi_lambda: record.phi_lambda,
        weight: change_of_measure_weight(record.size, record.phi_lambda, t0, t),
        payload: payload.value(record.size),
        m_t: record.size as f64 - 1.0 - t0 * record.phi_lambda,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Reweighted {
    pub estimate: Estimate,
    /// `(Σw)² / Σw²` over finite samples.
    pub effective_sample_size: f64,
    pub ess_fraction: f64,
    /// Set when the effective sample size is below 10% of the sample count.
    pub low_ess: bool,
}

/// Estimate `E_t[f(|C|) 1{|C| < ∞}]` from clusters sampled at `t0`.
/// Truncated samples stay in the denominator and contribute zero.
pub fn reweight_estimate(records: &[ClusterRecord], t0: f64, t: f64, payload: &Payload) -> Result<Reweighted> {
    if !(t > 0.0) || !(t0 > 0.0) {
        return Err(RcmError::InvalidArgument(format!("intensities must be positive (t = {t}, t0 = {t0})")));
    }
    let mut tally = Tally::new();
    let (mut sw, mut sw2) = (0.0, 0.0);
    for r in records {
        if r.truncated {
            tally.push(0.0);
            continue;
        }
        if r.phi_lambda.is_nan() {
            return Err(RcmError::InvalidArgument("reweighting needs phi_lambda for every finite sample".into()));
        }
        let w = weighted_sample(r, t0, t, payload);
        tally.push(w.weight * w.payload);
        sw += w.weight;
        sw2 += w.weight * w.weight;
    }
    let ess = if sw2 > 0.0 { sw * sw / sw2 } else { 0.0 };
    let frac = if records.is_empty() { 0.0 } else { ess / records.len() as f64 };
    Ok(Reweighted {
        estimate: tally.estimate().with_censored(censored_fraction(records)),
        effective_sample_size: ess,
        ess_fraction: frac,
        low_ess: frac < 0.1,
    })
}

/// `t⁻¹ · mean(M_t · f)`, estimating `d/dt E_t f(|C|)`.
///
/// Payloads that do not decay fast enough are only accepted when no sample
/// was truncated.
pub fn mr_derivative(records: &[ClusterRecord], t: f64, payload: &Payload) -> Result<Estimate> {
    if !(t > 0.0) {
        return Err(RcmError::InvalidArgument(format!("t must be positive, got {t}")));
    }
    let truncated = records.iter().any(|r| r.truncated);
    if truncated && !payload.decays_fast_enough() {
        return Err(RcmError::InvalidArgument(format!(
            "payload {payload:?} does not decay fast enough for truncated samples"
        )));
    }
    let mut tally = Tally::new();
    for r in records {
        if r.truncated {
            tally.push(0.0);
            continue;
        }
        if r.phi_lambda.is_nan() {
            return Err(RcmError::InvalidArgument("derivative needs phi_lambda for every finite sample".into()));
        }
        let m = r.size as f64 - 1.0 - t * r.phi_lambda;
        tally.push(m * payload.value(r.size) / t);
    }
    Ok(tally.estimate().with_censored(censored_fraction(records)))
}

/// Options for [`kappa_sweep_and_convexity`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepOptions {
    pub reps: usize,
    pub limits: ExplorationLimits,
    /// Step of the central difference used for `d/dt (t κ)`.
    pub derivative_step: f64,
    /// Grid indices where both sides of the derivative identity are estimated.
    pub derivative_at: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivativeCheck {
    pub t: f64,
    /// Central difference of `t κ(t)`.
    pub finite_difference: Estimate,
    /// `1 − E[N⁰]` from the split count of the explored root.
    pub split_side: Estimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub grid: Vec<f64>,
    pub kappa: Vec<Estimate>,
    pub theta: Vec<Estimate>,
    /// Second divided differences of `t κ(t) + d_φ t²/2` at interior points.
    pub second_differences: Vec<Estimate>,
    pub derivatives: Vec<DerivativeCheck>,
}

impl SweepResult {
    /// All second differences are at least `−k` standard errors.
    pub fn convex_within(&self, k: f64) -> bool {
        self.second_differences.iter().all(|e| e.value >= -k * e.stderr)
    }
}

/// Cluster density over a grid with the convexity and derivative checks.
pub fn kappa_sweep_and_convexity(
    grid: &[f64],
    model: &ConnectionModel,
    options: &SweepOptions,
    stream: &RngStream,
) -> Result<SweepResult> {
    if grid.len() < 3 {
        return Err(RcmError::InvalidArgument("sweep grid needs at least three points".into()));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) || grid[0] < 0.0 {
        return Err(RcmError::InvalidArgument("sweep grid must be nonnegative and strictly increasing".into()));
    }
    let d_phi = model.d_phi();
    let mut kappa = Vec::with_capacity(grid.len());
    let mut theta = Vec::with_capacity(grid.len());
    let mut splits = Vec::with_capacity(grid.len());
    for (i, &t) in grid.iter().enumerate() {
        let records =
            sample_cluster_records(t, model, &options.limits, None, options.reps, &stream.child(i as u64))?;
        kappa.push(kappa_from_records(&records));
        theta.push(theta_from_records(&records));
        splits.push(Estimate::mean_of(records.iter().map(|r| 1.0 - r.root_splits as f64)));
    }
    let g: Vec<Estimate> = grid
        .iter()
        .zip(&kappa)
        .map(|(&t, k)| Estimate::derived(t * k.value + 0.5 * d_phi * t * t, t * k.stderr, k.n))
        .collect();
    let mut second = Vec::new();
    for i in 1..grid.len() - 1 {
        let (h1, h2) = (grid[i] - grid[i - 1], grid[i + 1] - grid[i]);
        let (a, b, c) = (2.0 / (h1 * (h1 + h2)), -2.0 / (h1 * h2), 2.0 / (h2 * (h1 + h2)));
        let value = a * g[i - 1].value + b * g[i].value + c * g[i + 1].value;
        let se = ((a * g[i - 1].stderr).powi(2) + (b * g[i].stderr).powi(2) + (c * g[i + 1].stderr).powi(2)).sqrt();
        second.push(Estimate::derived(value, se, g[i].n));
    }
    let derive_stream = stream.labelled("derivative");
    let mut derivatives = Vec::new();
    for &i in &options.derivative_at {
        let t = *grid
            .get(i)
            .ok_or_else(|| RcmError::InvalidArgument(format!("derivative index {i} outside the grid")))?;
        let dt = options.derivative_step;
        if !(dt > 0.0) || t - dt < 0.0 {
            return Err(RcmError::InvalidArgument(format!("invalid derivative step at t = {t}")));
        }
        let side = |s: f64, k: u64| -> Result<Estimate> {
            let r = sample_cluster_records(s, model, &options.limits, None, options.reps, &derive_stream.child(2 * i as u64 + k))?;
            Ok(kappa_from_records(&r).scaled(s))
        };
        let up = side(t + dt, 1)?;
        let down = side(t - dt, 0)?;
        let fd = up.minus(&down).scaled(1.0 / (2.0 * dt));
        derivatives.push(DerivativeCheck { t, finite_difference: fd, split_side: splits[i] });
    }
    Ok(SweepResult { grid: grid.to_vec(), kappa, theta, second_differences: second, derivatives })
}

/// Weighted `φ_λ` values of clusters of one size: the empirical version of
/// `ν_n(du) = E_{t0}[1{φ_λ ∈ du} 1{|C| = n} e^{t0 φ_λ}]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalWeightMeasure {
    pub size: usize,
    pub t0: f64,
    /// `(φ_λ, e^{t0 φ_λ})`, sorted by `φ_λ`.
    pub atoms: Vec<(f64, f64)>,
    pub samples: usize,
}

impl EmpiricalWeightMeasure {
    pub fn from_records(records: &[ClusterRecord], size: usize, t0: f64) -> Result<Self> {
        let mut atoms = Vec::new();
        for r in records.iter().filter(|r| !r.truncated && r.size == size) {
            if r.phi_lambda.is_nan() {
                return Err(RcmError::InvalidArgument("weight measure needs phi_lambda values".into()));
            }
            atoms.push((r.phi_lambda, (t0 * r.phi_lambda).exp()));
        }
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        Ok(Self { size, t0, atoms, samples: records.len() })
    }

    /// `ν̂_n[0, u]` with its standard error.
    pub fn mass_up_to(&self, u: f64) -> Estimate {
        let k = self.atoms.partition_point(|a| a.0 <= u);
        let mut tally = Tally::from_values(self.atoms[..k].iter().map(|a| a.1));
        let zeros = Tally::from_values(std::iter::repeat(0.0).take(self.samples - k));
        tally.merge(&zeros);
        tally.estimate()
    }

    /// `(t0 e u / (n − 1))^(n − 1)`, or `1` for `n = 1`.
    pub fn bound(&self, u: f64) -> f64 {
        if self.size <= 1 {
            return 1.0;
        }
        let m = (self.size - 1) as f64;
        (self.t0 * std::f64::consts::E * u / m).powf(m)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NuBoundRow {
    pub u: f64,
    pub mass: Estimate,
    pub bound: f64,
    /// `mass − 3·stderr > bound`
    pub violated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NuBoundReport {
    pub size: usize,
    pub rows: Vec<NuBoundRow>,
    pub violations: usize,
}

/// Compare `ν̂_n[0, u]` against its upper bound on a grid of `u` values.
pub fn nu_bound_check(records: &[ClusterRecord], t0: f64, size: usize, u_grid: &[f64]) -> Result<NuBoundReport> {
    if size < 2 {
        return Err(RcmError::InvalidArgument("the bound check needs n >= 2".into()));
    }
    let measure = EmpiricalWeightMeasure::from_records(records, size, t0)?;
    let rows: Vec<NuBoundRow> = u_grid
        .iter()
        .map(|&u| {
            let mass = measure.mass_up_to(u);
            let bound = measure.bound(u);
            NuBoundRow { u, mass, bound, violated: mass.value - 3.0 * mass.stderr > bound }
        })
        .collect();
    let violations = rows.iter().filter(|r| r.violated).count();
    Ok(NuBoundReport { size, rows, violations })
}
