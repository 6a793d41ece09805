//! Dispatch from experiment kind to the core estimators.

use anyhow::{bail, Context};
use serde_json::json;

use rcmlab_core::boundary::deletion_stability_statistic;
use rcmlab_core::estimators::{kappa_from_records, kappa_window_estimates, size_pmf_from, theta_from_records};
use rcmlab_core::explorer::{explorer_vs_window_consistency, mean_size_identity};
use rcmlab_core::parallel::try_replicate;
use rcmlab_core::{
    build_graph, build_kernel_matrix, check_irreducible, coupled_boundary_graphs, kappa_sweep_and_convexity,
    mr_derivative, reweight_estimate, sample_cluster_records, sample_poisson, BoundaryMode, ConnectionModel, Estimate,
    MarkGrid, Payload, RngStream, SweepOptions, Verdict, Window,
};

use crate::config::{ExperimentConfig, Kind};
use crate::output::Record;

/// Standard errors allowed between estimators that should agree.
const AGREEMENT: f64 = 3.0;

pub struct RunOutput {
    pub records: Vec<Record>,
    pub report: Option<serde_json::Value>,
    /// Set by the consistency suite when a check fails.
    pub failed_checks: Vec<String>,
}

impl RunOutput {
    fn records(records: Vec<Record>) -> Self {
        Self { records, report: None, failed_checks: Vec::new() }
    }
}

pub fn run(config: &ExperimentConfig, seed: u64) -> anyhow::Result<RunOutput> {
    let model = config.model.build().context("building model")?;
    let base = RngStream::new(seed, 0);
    match config.kind {
        Kind::Simulate => simulate(config, &model, &base),
        Kind::Explore => explore(config, &model, &base),
        Kind::Sweep => sweep(config, &model, &base),
        Kind::ReweightCheck => reweight_check(config, &model, &base),
        Kind::DerivativeCheck => derivative_check(config, &model, &base),
        Kind::Convexity => convexity(config, &model, &base),
        Kind::Irreducibility => irreducibility(config, &model),
        Kind::UniquenessProbe => uniqueness_probe(config, &model, &base),
        Kind::ConsistencySuite => consistency_suite(config, &model, &base),
    }
}

fn simulate(config: &ExperimentConfig, model: &ConnectionModel, base: &RngStream) -> anyhow::Result<RunOutput> {
    let t = config.require_t()?;
    let window = config.require_window()?;
    let rows = try_replicate(config.reps, base, |_, s| {
        let mut rng = s.rng();
        let c = sample_poisson(&window, t, model.marks(), &config.caps, &mut rng)?;
        let g = build_graph(&c, model, &config.caps, &mut rng)?;
        let largest = (0..g.vertex_count()).map(|i| g.cluster_size(i)).max().unwrap_or(0);
        let isolated = (0..g.vertex_count()).filter(|&i| g.degree(i) == 0).count();
        Ok([g.vertex_count(), g.edge_count(), g.cluster_count(), largest, isolated].map(|v| v as f64))
    })?;
    let names = ["points", "edges", "clusters", "largest_cluster", "isolated"];
    let records = names
        .iter()
        .enumerate()
        .map(|(k, name)| Record::new(*name, Some(t), None, &Estimate::mean_of(rows.iter().map(|r| r[k]))))
        .collect();
    Ok(RunOutput::records(records))
}

fn size_records(records: &mut Vec<Record>, prefix: &str, t: f64, t0: Option<f64>, pmf: &rcmlab_core::estimators::SizePmf) {
    for (k, e) in pmf.bins.iter().enumerate() {
        records.push(Record::new(format!("{prefix}{}", k + 1), Some(t), t0, e));
    }
    records.push(Record::new(format!("{prefix}tail"), Some(t), t0, &pmf.tail));
}

fn explore(config: &ExperimentConfig, model: &ConnectionModel, base: &RngStream) -> anyhow::Result<RunOutput> {
    let t = config.require_t()?;
    let recs = sample_cluster_records(t, model, &config.limits, None, config.reps, base)?;
    let finite: Vec<f64> = recs.iter().filter(|r| !r.truncated).map(|r| r.size as f64).collect();
    let mut out = vec![
        Record::new("theta", Some(t), None, &theta_from_records(&recs)),
        Record::new("kappa", Some(t), None, &kappa_from_records(&recs)),
        Record::new("mean_finite_size", Some(t), None, &Estimate::mean_of(finite)),
    ];
    size_records(&mut out, "p_", t, None, &size_pmf_from(&recs, config.max_size));
    Ok(RunOutput::records(out))
}

fn sweep(config: &ExperimentConfig, model: &ConnectionModel, base: &RngStream) -> anyhow::Result<RunOutput> {
    let mut out = Vec::new();
    for (i, &t) in config.require_grid()?.iter().enumerate() {
        let recs = sample_cluster_records(t, model, &config.limits, None, config.reps, &base.child(i as u64))?;
        out.push(Record::new("kappa", Some(t), None, &kappa_from_records(&recs)));
        out.push(Record::new("t_kappa", Some(t), None, &kappa_from_records(&recs).scaled(t)));
        out.push(Record::new("theta", Some(t), None, &theta_from_records(&recs)));
    }
    Ok(RunOutput::records(out))
}

fn reweight_check(config: &ExperimentConfig, model: &ConnectionModel, base: &RngStream) -> anyhow::Result<RunOutput> {
    let (t, t0) = (config.require_t()?, config.require_t0()?);
    let sampled = sample_cluster_records(t0, model, &config.limits, Some(&config.quadrature), config.reps, &base.labelled("base"))?;
    let direct = sample_cluster_records(t, model, &config.limits, None, config.reps, &base.labelled("direct"))?;
    let pmf = size_pmf_from(&direct, config.max_size);
    let mut out = Vec::new();
    let mut worst: f64 = 0.0;
    let mut ess: f64 = 1.0;
    for n in 1..=config.max_size {
        let r = reweight_estimate(&sampled, t0, t, &Payload::SizeIs { size: n })?;
        worst = worst.max(r.estimate.z_against(&pmf.bins[n - 1]));
        ess = ess.min(r.ess_fraction);
        out.push(Record::new(format!("p_{n}_reweighted"), Some(t), Some(t0), &r.estimate));
        out.push(Record::new(format!("p_{n}_direct"), Some(t), None, &pmf.bins[n - 1]));
    }
    out.push(Record::exact("max_abs_z", Some(t), worst));
    out.push(Record::exact("ess_fraction", Some(t), ess));
    Ok(RunOutput::records(out))
}

fn derivative_check(config: &ExperimentConfig, model: &ConnectionModel, base: &RngStream) -> anyhow::Result<RunOutput> {
    let t = config.require_t()?;
    let payload = Payload::InverseSize;
    let recs = sample_cluster_records(t, model, &config.limits, Some(&config.quadrature), config.reps, &base.labelled("centre"))?;
    let mr = mr_derivative(&recs, t, &payload)?;
    let side = |s: f64, label: &str| -> anyhow::Result<Estimate> {
        let r = sample_cluster_records(s, model, &config.limits, None, config.reps, &base.labelled(label))?;
        Ok(kappa_from_records(&r))
    };
    let fd = side(t + config.step, "up")?.minus(&side(t - config.step, "down")?).scaled(0.5 / config.step);
    Ok(RunOutput::records(vec![
        Record::new("dkappa_dt_russo", Some(t), None, &mr),
        Record::new("dkappa_dt_central_difference", Some(t), None, &fd),
        Record::exact("abs_z", Some(t), mr.z_against(&fd)),
    ]))
}

fn convexity(config: &ExperimentConfig, model: &ConnectionModel, base: &RngStream) -> anyhow::Result<RunOutput> {
    let grid = config.require_grid()?;
    let options = SweepOptions {
        reps: config.reps,
        limits: config.limits,
        derivative_step: config.step,
        derivative_at: (1..grid.len().saturating_sub(1)).collect(),
    };
    let s = kappa_sweep_and_convexity(grid, model, &options, base)?;
    let mut out = Vec::new();
    for (t, k) in s.grid.iter().zip(&s.kappa) {
        out.push(Record::new("kappa", Some(*t), None, k));
    }
    for (t, e) in s.grid[1..].iter().zip(&s.second_differences) {
        out.push(Record::new("second_difference", Some(*t), None, e));
    }
    for d in &s.derivatives {
        out.push(Record::new("d_t_kappa_central_difference", Some(d.t), None, &d.finite_difference));
        out.push(Record::new("one_minus_mean_root_splits", Some(d.t), None, &d.split_side));
    }
    out.push(Record::exact("convex_within_3_stderr", None, s.convex_within(AGREEMENT) as u8 as f64));
    Ok(RunOutput::records(out))
}

fn irreducibility(config: &ExperimentConfig, model: &ConnectionModel) -> anyhow::Result<RunOutput> {
    let grid = MarkGrid::from_distribution(model.marks(), config.cells)?;
    let kernel = build_kernel_matrix(model, &grid)?;
    let report = check_irreducible(&kernel, &grid, None);
    let records = vec![
        Record::exact("irreducible", None, (report.verdict == Verdict::Irreducible) as u8 as f64),
        Record::exact("blocks", None, report.blocks.len() as f64),
        Record::exact("isolated_rows", None, report.conditions.isolated.len() as f64),
    ];
    Ok(RunOutput { records, report: Some(serde_json::to_value(&report)?), failed_checks: Vec::new() })
}

fn uniqueness_probe(config: &ExperimentConfig, model: &ConnectionModel, base: &RngStream) -> anyhow::Result<RunOutput> {
    let t = config.require_t()?;
    let t0 = config.t0.unwrap_or(t);
    let sides = config.sides.as_deref().unwrap_or_default();
    if sides.is_empty() {
        bail!("`sides` is required for the uniqueness probe");
    }
    let shell = config.shell_width(model);
    let mut out = Vec::new();
    for (k, &side) in sides.iter().enumerate() {
        let inner = Window::cube(model.dimension(), side, BoundaryMode::Free)?;
        let rows = try_replicate(config.reps, &base.child(k as u64), |_, s| {
            let g = coupled_boundary_graphs(&inner, shell, t, t0, model, &config.caps, &mut s.rng())?;
            let ds = deletion_stability_statistic(&g.mid);
            Ok((ds.rate, g.stats.sandwich_holds(), g.stats.m_free as f64, g.stats.m_mid, g.stats.m_wired as f64))
        })?;
        let vol = inner.volume();
        let tag = |q: &str| format!("{q}[side={side}]");
        out.push(Record::new(tag("deletion_rate"), Some(t), Some(t0), &Estimate::mean_of(rows.iter().map(|r| r.0))));
        out.push(Record::exact(tag("sandwich_failures"), Some(t), rows.iter().filter(|r| !r.1).count() as f64));
        out.push(Record::new(tag("free_clusters_per_volume"), Some(t), Some(t0), &Estimate::mean_of(rows.iter().map(|r| r.2 / vol))));
        out.push(Record::new(tag("mid_clusters_per_volume"), Some(t), Some(t0), &Estimate::mean_of(rows.iter().map(|r| r.3 / vol))));
        out.push(Record::new(tag("wired_clusters_per_volume"), Some(t), Some(t0), &Estimate::mean_of(rows.iter().map(|r| r.4 / vol))));
    }
    Ok(RunOutput::records(out))
}

struct Check {
    name: &'static str,
    pass: bool,
    z: f64,
}

/// Fast property checks on the configured model; `reps` sets the budget.
fn consistency_suite(config: &ExperimentConfig, model: &ConnectionModel, base: &RngStream) -> anyhow::Result<RunOutput> {
    let t = config.t.unwrap_or(0.5);
    let reps = config.reps;
    let mut checks = Vec::new();

    // isolation probability of the typical vertex: E_Q exp(−t D_φ(p))
    let recs = sample_cluster_records(t, model, &config.limits, Some(&config.quadrature), reps, &base.labelled("explore"))?;
    let mut exact = 0.0;
    for (p, w) in model.marks().quadrature_nodes() {
        exact += w * (-t * model.degree_integral(p)?).exp();
    }
    let p1 = size_pmf_from(&recs, 1).bins[0];
    let z = p1.z_against(&Estimate::exact(exact));
    checks.push(Check { name: "isolation_probability", pass: z <= AGREEMENT, z });

    // reweighting at the sampling intensity is the identity
    let same = reweight_estimate(&recs, t, t, &Payload::InverseSize)?.estimate;
    let plain = kappa_from_records(&recs);
    let identical = same.value.to_bits() == plain.value.to_bits();
    checks.push(Check { name: "reweight_identity", pass: identical, z: 0.0 });

    // mean-size identity
    let (lhs, rhs) = mean_size_identity(model, t, &config.limits, &config.quadrature, reps, &base.labelled("mean-size"))?;
    let z = lhs.z_against(&rhs);
    checks.push(Check { name: "mean_size_identity", pass: z <= AGREEMENT, z });

    let range = model.range_bound();
    if range.is_finite() {
        let side = config.window.as_ref().and_then(|w| w.side).unwrap_or(10.0 * range.max(1.0));
        let inner = Window::cube(model.dimension(), side, BoundaryMode::Free)?;

        // boundary sandwich and subgraph chain, exact
        let t0 = config.t0.unwrap_or(t).max(t);
        let rows = try_replicate(reps.min(200), &base.labelled("sandwich"), |_, s| {
            let g = coupled_boundary_graphs(&inner, range, t, t0, model, &config.caps, &mut s.rng())?;
            Ok(g.stats.sandwich_holds() && g.free.is_subgraph_of(&g.mid) && g.mid.is_subgraph_of(&g.wired))
        })?;
        checks.push(Check { name: "boundary_sandwich_and_chain", pass: rows.iter().all(|&ok| ok), z: 0.0 });

        // mean edge count on a torus: t² |W| d_φ / 2
        let torus = inner.with_mode(BoundaryMode::Torus);
        if torus.check_range(range).is_ok() {
            let edges = try_replicate(reps.min(200), &base.labelled("edges"), |_, s| {
                let mut rng = s.rng();
                let c = sample_poisson(&torus, t, model.marks(), &config.caps, &mut rng)?;
                Ok(build_graph(&c, model, &config.caps, &mut rng)?.edge_count() as f64)
            })?;
            let e = Estimate::mean_of(edges);
            let z = e.z_against(&Estimate::exact(0.5 * t * t * torus.volume() * model.d_phi()));
            checks.push(Check { name: "mean_edge_count", pass: z <= AGREEMENT, z });
        }

        // explorer against a vertex added to a window simulation
        let big = Window::cube(model.dimension(), 4.0 * side, BoundaryMode::Free)?;
        let mark = model.marks().quadrature_nodes()[0].0;
        let report = explorer_vs_window_consistency(model, t, mark, &big, &config.limits, reps, &config.caps, &base.labelled("palm"))?;
        let ratio = if report.pooled_noise > 0.0 { report.total_variation / report.pooled_noise } else { 0.0 };
        checks.push(Check { name: "explorer_window_consistency", pass: report.passes(AGREEMENT), z: ratio });

        // window and explorer estimators of t·κ
        let w = kappa_window_estimates(t, model, &inner, 3.0 * range, 3.0 * range, &config.caps, reps.min(200), &base.labelled("kappa"))?;
        let explorer = plain.scaled(t);
        let z = w.mid.z_against(&explorer);
        checks.push(Check { name: "kappa_window_vs_explorer", pass: z <= AGREEMENT && w.sandwich_failures == 0, z });
    }

    let records = checks
        .iter()
        .map(|c| Record::new(format!("check:{}", c.name), Some(t), None, &Estimate::derived(c.pass as u8 as f64, 0.0, reps as u64)))
        .chain(checks.iter().map(|c| Record::exact(format!("z:{}", c.name), Some(t), c.z)))
        .collect();
    let failed_checks = checks.iter().filter(|c| !c.pass).map(|c| c.name.to_string()).collect();
    let report = json!({
        "checks": checks.iter().map(|c| json!({"name": c.name, "pass": c.pass, "z": c.z})).collect::<Vec<_>>(),
    });
    Ok(RunOutput { records, report: Some(report), failed_checks })
}
