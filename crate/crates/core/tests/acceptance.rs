//! Acceptance suite: one PASS/FAIL line per criterion, exit code 1 if any fails.

use std::time::Instant;

use rcmlab_core::boundary::deletion_stability_statistic;
use rcmlab_core::estimators::{kappa_window_estimates, size_pmf_from};
use rcmlab_core::explorer::{explorer_vs_window_consistency, mean_size_identity};
use rcmlab_core::irreducibility::{build_kernel_matrix, check_irreducible, check_minimal_conditions, MarkGrid, Verdict};
use rcmlab_core::model::gilbert;
use rcmlab_core::parallel::try_replicate;
use rcmlab_core::{
    build_graph, coupled_boundary_graphs, kappa_sweep_and_convexity, mr_derivative, nu_bound_check,
    reweight_estimate, sample_cluster_records, sample_poisson, BoundaryMode, ConnectionKind, ConnectionModel,
    CouplingWeights, EdgeUniforms, Estimate, ExplorationLimits, KernelMatrix, MarkDistribution, MarkKernel, Payload,
    Profile, QuadratureSpec, ResourceCaps, Result, RngStream, SpatialFactor, SweepOptions, Window,
};

const SEED: u64 = 20_241;
/// Agreement tolerance in combined standard errors.
const K: f64 = 3.0;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Result<Outcome> {
    Ok(Outcome { pass, detail })
}

fn limits() -> ExplorationLimits {
    ExplorationLimits { max_generations: 10_000, max_vertices: 20_000, max_candidates: 50_000_000 }
}

fn stream(id: u64) -> RngStream {
    RngStream::new(SEED, id)
}

fn square(side: f64) -> Window {
    Window::cube(2, side, BoundaryMode::Free).unwrap()
}

fn isolation_probability() -> Result<Outcome> {
    let m = gilbert(2, 0.5);
    let recs = sample_cluster_records(1.0, &m, &limits(), None, 20_000, &stream(1))?;
    let p1 = size_pmf_from(&recs, 1).bins[0];
    let exact = (-std::f64::consts::PI).exp();
    let z = (p1.value - exact) / p1.stderr;
    outcome(z.abs() <= K, format!("p1 = {:.5} ± {:.5}, exact {exact:.6}, z = {z:.2}", p1.value, p1.stderr))
}

fn sandwich_and_chain() -> Result<(Outcome, Outcome)> {
    let m = gilbert(2, 0.5);
    let inner = square(20.0);
    let caps = ResourceCaps::default();
    let rows = try_replicate(1000, &stream(2), |_, s| {
        let g = coupled_boundary_graphs(&inner, 1.0, 0.5, 1.0, &m, &caps, &mut s.rng())?;
        Ok((g.stats.sandwich_holds(), g.free.is_subgraph_of(&g.mid) && g.mid.is_subgraph_of(&g.wired)))
    })?;
    let sandwich = rows.iter().filter(|r| r.0).count();
    let chain = rows.iter().filter(|r| r.1).count();
    Ok((
        Outcome { pass: sandwich == rows.len(), detail: format!("{sandwich}/{} realizations", rows.len()) },
        Outcome { pass: chain == rows.len(), detail: format!("{chain}/{} realizations", rows.len()) },
    ))
}

/// Clusters at the base intensity `t0 = 1`, shared by the reweighting and weight-measure checks.
fn base_records() -> Result<Vec<rcmlab_core::ClusterRecord>> {
    sample_cluster_records(1.0, &gilbert(2, 0.5), &limits(), Some(&QuadratureSpec::default()), 20_000, &stream(4))
}

fn reweighting(base: &[rcmlab_core::ClusterRecord]) -> Result<Outcome> {
    let m = gilbert(2, 0.5);
    let direct = sample_cluster_records(0.6, &m, &limits(), None, 20_000, &stream(5))?;
    let pmf = size_pmf_from(&direct, 10);
    let mut worst: f64 = 0.0;
    let mut ess = 1.0f64;
    for n in 1..=10 {
        let r = reweight_estimate(base, 1.0, 0.6, &Payload::SizeIs { size: n })?;
        worst = worst.max(r.estimate.z_against(&pmf.bins[n - 1]).abs());
        ess = ess.min(r.ess_fraction);
    }
    outcome(worst <= K && ess >= 0.3, format!("max |z| = {worst:.2} over n = 1..10, ESS fraction {ess:.3}"))
}

fn margulis_russo() -> Result<Outcome> {
    let m = gilbert(2, 0.5);
    let spec = QuadratureSpec::default();
    let reps = 50_000;
    let dt = 0.05;
    let mut details = Vec::new();
    let mut pass = true;
    for (i, t) in [0.4, 0.8].into_iter().enumerate() {
        let base = stream(6).child(i as u64);
        let recs = sample_cluster_records(t, &m, &limits(), Some(&spec), reps, &base.child(0))?;
        let mr = mr_derivative(&recs, t, &Payload::InverseSize)?;
        let kappa = |s: f64, c: u64| -> Result<Estimate> {
            let r = sample_cluster_records(s, &m, &limits(), None, reps, &base.child(c))?;
            Ok(Estimate::mean_of(r.iter().map(|x| if x.truncated { 0.0 } else { 1.0 / x.size as f64 })))
        };
        let fd = kappa(t + dt, 1)?.minus(&kappa(t - dt, 2)?).scaled(1.0 / (2.0 * dt));
        let z = mr.z_against(&fd);
        pass &= z.abs() <= K;
        details.push(format!(
            "t = {t}: MR {:.4} ± {:.4}, FD {:.4} ± {:.4}, z = {z:.2}",
            mr.value, mr.stderr, fd.value, fd.stderr
        ));
    }
    outcome(pass, details.join("; "))
}

fn mean_size() -> Result<Outcome> {
    let (lhs, rhs) =
        mean_size_identity(&gilbert(2, 0.5), 0.4, &limits(), &QuadratureSpec::default(), 20_000, &stream(7))?;
    let z = lhs.z_against(&rhs);
    outcome(
        z.abs() <= K,
        format!("E(|C|-1) = {:.4} ± {:.4}, t E phi = {:.4} ± {:.4}, z = {z:.2}", lhs.value, lhs.stderr, rhs.value, rhs.stderr),
    )
}

fn convexity_and_derivative() -> Result<(Outcome, Outcome)> {
    let grid: Vec<f64> = (0..7).map(|i| 0.2 + 0.2 * i as f64).collect();
    let options = SweepOptions {
        reps: 20_000,
        limits: ExplorationLimits { max_vertices: 5_000, ..limits() },
        derivative_step: 0.05,
        derivative_at: vec![2, 3],
    };
    let sweep = kappa_sweep_and_convexity(&grid, &gilbert(2, 0.5), &options, &stream(8))?;
    let worst = sweep
        .second_differences
        .iter()
        .map(|e| e.value / e.stderr.max(f64::MIN_POSITIVE))
        .fold(f64::INFINITY, f64::min);
    let convex = Outcome {
        pass: sweep.convex_within(K),
        detail: format!(
            "{} second differences, smallest {:.2} stderr",
            sweep.second_differences.len(),
            worst
        ),
    };
    let mut pass = true;
    let mut details = Vec::new();
    for d in &sweep.derivatives {
        let z = d.finite_difference.z_against(&d.split_side);
        pass &= z.abs() <= K;
        details.push(format!(
            "t = {:.1}: d(t kappa)/dt {:.4} ± {:.4}, 1 - E N0 {:.4} ± {:.4}, z = {z:.2}",
            d.t, d.finite_difference.value, d.finite_difference.stderr, d.split_side.value, d.split_side.stderr
        ));
    }
    Ok((convex, Outcome { pass, detail: details.join("; ") }))
}

fn explorer_window() -> Result<Outcome> {
    let r = explorer_vs_window_consistency(
        &gilbert(2, 0.5),
        0.4,
        0.5,
        &square(40.0),
        &limits(),
        10_000,
        &ResourceCaps::default(),
        &stream(9),
    )?;
    outcome(
        r.passes(K),
        format!("TV = {:.4}, pooled noise {:.4}, ratio {:.2}", r.total_variation, r.pooled_noise, r.total_variation / r.pooled_noise),
    )
}

fn irreducibility() -> Result<Outcome> {
    let unit = MarkDistribution::Uniform { lo: 0.0, hi: 1.0 };
    let grid = |k| MarkGrid::from_distribution(&unit, k);
    let two_block = ConnectionModel::new(ConnectionKind::TwoBlock { radius: 1.0, split: 0.5, within: 1.0 }, unit.clone(), 2)?;
    let g16 = grid(16)?;
    let r = check_irreducible(&build_kernel_matrix(&two_block, &g16)?, &g16, None);
    let blocks_ok = r.verdict == Verdict::Reducible && r.blocks == vec![(0..8).collect::<Vec<_>>(), (8..16).collect()];

    let weighted = ConnectionModel::new(
        ConnectionKind::Weighted { profile: Profile::Indicator, beta: 1.0, gamma_min: 0.5, gamma_max: 0.5 },
        unit.clone(),
        2,
    )?;
    let g32 = grid(32)?;
    let w = check_irreducible(&build_kernel_matrix(&weighted, &g32)?, &g32, None);
    let weighted_ok = w.verdict == Verdict::Irreducible && w.conditions.monotone_shortcut;

    let factorized = ConnectionModel::new(
        ConnectionKind::Factorized { spatial: SpatialFactor::Ball { radius: 1.0 }, kernel: MarkKernel::Constant { value: 0.7 } },
        unit,
        2,
    )?;
    let f = check_irreducible(&build_kernel_matrix(&factorized, &g16)?, &g16, None);
    let factorized_ok = f.verdict == Verdict::Irreducible;

    let mut rows = vec![vec![1.0; 4]; 4];
    for i in 0..4 {
        rows[1][i] = 0.0;
        rows[i][1] = 0.0;
    }
    let zero_row = KernelMatrix::from_rows(&rows)?;
    let g4 = MarkGrid::new(vec![0.0, 1.0, 2.0, 3.0], vec![0.25; 4])?;
    let c = check_minimal_conditions(&zero_row, &g4);
    let zero_row_ok = c.isolated == vec![1] && check_irreducible(&zero_row, &g4, None).verdict == Verdict::Reducible;

    outcome(
        blocks_ok && weighted_ok && factorized_ok && zero_row_ok,
        format!("two-block {blocks_ok}, weighted {weighted_ok}, factorized {factorized_ok}, zero row {zero_row_ok}"),
    )
}

fn nu_bound(base: &[rcmlab_core::ClusterRecord]) -> Result<Outcome> {
    let u_grid: Vec<f64> = (1..=20).map(|i| 0.5 * i as f64).collect();
    let report = nu_bound_check(base, 1.0, 2, &u_grid)?;
    let tightest = report
        .rows
        .iter()
        .map(|r| (r.mass.value - r.bound) / r.mass.stderr.max(f64::MIN_POSITIVE))
        .fold(f64::NEG_INFINITY, f64::max);
    outcome(
        report.violations == 0,
        format!("{} of {} grid points violate; largest excess {tightest:.2} stderr", report.violations, u_grid.len()),
    )
}

fn scaling_coupling() -> Result<Outcome> {
    let m = gilbert(2, 0.5);
    let side = 20.0;
    let caps = ResourceCaps::default();
    let scales = [0.5, 1.0, 1.5];
    let reps = 400;
    let torus = |s: f64| Window::cube(2, s, BoundaryMode::Torus).unwrap();
    let base = torus(side);
    let coupled = try_replicate(reps, &stream(12).child(0), |_, s| {
        let mut rng = s.rng();
        let c = sample_poisson(&base, 1.0, m.marks(), &caps, &mut rng)?;
        let w = CouplingWeights::new(&c, &m, &EdgeUniforms::from_rng(&mut rng), 1.5, &caps)?;
        Ok(scales.map(|r| w.edges_at(r).count() as f64))
    })?;
    let mut pass = true;
    let mut details = Vec::new();
    for (k, &r) in scales.iter().enumerate() {
        let window = torus(side / r);
        let direct = try_replicate(reps, &stream(12).child(1 + k as u64), |_, s| {
            let mut rng = s.rng();
            let c = sample_poisson(&window, r * r, m.marks(), &caps, &mut rng)?;
            Ok(build_graph(&c, &m, &caps, &mut rng)?.edge_count() as f64)
        })?;
        let a = Estimate::mean_of(coupled.iter().map(|v| v[k]));
        let b = Estimate::mean_of(direct);
        let z = a.z_against(&b);
        pass &= z.abs() <= K;
        details.push(format!("r = {r}: {:.1} vs {:.1}, z = {z:.2}", a.value, b.value));
    }
    outcome(pass, details.join("; "))
}

fn kappa_cross() -> Result<Outcome> {
    let m = gilbert(2, 0.5);
    let t = 0.5;
    let w = kappa_window_estimates(t, &m, &square(30.0), 3.0, 3.0, &ResourceCaps::default(), 400, &stream(13))?;
    let recs = sample_cluster_records(t, &m, &limits(), None, 20_000, &stream(14))?;
    let explorer =
        Estimate::mean_of(recs.iter().map(|x| if x.truncated { 0.0 } else { 1.0 / x.size as f64 })).scaled(t);
    let pairs = [
        ("window/representative", w.mid.z_against(&w.representative)),
        ("window/explorer", w.mid.z_against(&explorer)),
        ("representative/explorer", w.representative.z_against(&explorer)),
    ];
    let pass = pairs.iter().all(|p| p.1.abs() <= K);
    let zs: Vec<String> = pairs.iter().map(|(n, z)| format!("{n} z = {z:.2}")).collect();
    outcome(
        pass,
        format!(
            "window {:.4} ± {:.4}, representative {:.4} ± {:.4}, explorer {:.4} ± {:.4}; {}",
            w.mid.value,
            w.mid.stderr,
            w.representative.value,
            w.representative.stderr,
            explorer.value,
            explorer.stderr,
            zs.join(", ")
        ),
    )
}

fn deletion_stability() -> Result<Outcome> {
    let m = gilbert(2, 0.5);
    let t = 3.0;
    let caps = ResourceCaps::default();
    let mut rates = Vec::new();
    for (k, (side, reps)) in [(10.0, 200), (20.0, 100), (40.0, 50)].into_iter().enumerate() {
        let inner = square(side);
        let rows = try_replicate(reps, &stream(15).child(k as u64), |_, s| {
            let g = coupled_boundary_graphs(&inner, 2.0, t, t, &m, &caps, &mut s.rng())?;
            Ok(deletion_stability_statistic(&g.mid).rate)
        })?;
        rates.push((side, Estimate::mean_of(rows)));
    }
    let trend = rates.windows(2).all(|w| w[1].1.value <= w[0].1.value + K * w[0].1.stderr.hypot(w[1].1.stderr));
    let last = rates[rates.len() - 1].1;
    let desc: Vec<String> = rates.iter().map(|(s, e)| format!("side {s}: {:.5} ± {:.5}", e.value, e.stderr)).collect();
    outcome(trend && last.value < 0.01, desc.join("; "))
}

fn main() {
    let mut failures = 0;
    let mut report = |id: usize, name: &str, started: Instant, o: Result<Outcome>| {
        let secs = started.elapsed().as_secs_f64();
        match o {
            Ok(o) => {
                let tag = if o.pass { "PASS" } else { "FAIL" };
                failures += usize::from(!o.pass);
                println!("{tag} [{id:>2}] {name}: {} ({secs:.1}s)", o.detail);
            }
            Err(e) => {
                failures += 1;
                println!("FAIL [{id:>2}] {name}: error {e} ({secs:.1}s)");
            }
        }
    };
    let split = |r: Result<(Outcome, Outcome)>| match r {
        Ok((a, b)) => (Ok(a), Ok(b)),
        Err(e) => (Err(e.clone()), Err(e)),
    };

    let s = Instant::now();
    report(1, "isolation probability", s, isolation_probability());
    let s = Instant::now();
    let (a, b) = split(sandwich_and_chain());
    report(2, "boundary sandwich", s, a);
    report(3, "free/mid/wired subgraph chain", s, b);
    let s = Instant::now();
    let base = base_records();
    match &base {
        Ok(base) => report(4, "reweighting to a lower intensity", s, reweighting(base)),
        Err(e) => report(4, "reweighting to a lower intensity", s, Err(e.clone())),
    }
    let s = Instant::now();
    report(5, "derivative vs finite difference", s, margulis_russo());
    let s = Instant::now();
    report(6, "mean-size identity", s, mean_size());
    let s = Instant::now();
    let (a, b) = split(convexity_and_derivative());
    report(7, "convexity of t kappa + d t^2/2", s, a);
    report(8, "cluster-density derivative identity", s, b);
    let s = Instant::now();
    report(9, "explorer/window consistency", s, explorer_window());
    let s = Instant::now();
    report(10, "irreducibility verdicts", s, irreducibility());
    let s = Instant::now();
    match &base {
        Ok(base) => report(11, "weight-measure bound", s, nu_bound(base)),
        Err(e) => report(11, "weight-measure bound", s, Err(e.clone())),
    }
    let s = Instant::now();
    report(12, "scaling coupling", s, scaling_coupling());
    let s = Instant::now();
    report(13, "cluster-density cross-estimators", s, kappa_cross());
    let s = Instant::now();
    report(14, "deletion-stability trend", s, deletion_stability());

    println!("{} criteria failed", failures);
    if failures > 0 {
        std::process::exit(1);
    }
}
