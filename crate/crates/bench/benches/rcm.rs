use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

use rcmlab_core::model::gilbert;
use rcmlab_core::unionfind::DisjointSets;
use rcmlab_core::{
    build_graph_with, explore_typical, sample_poisson, BoundaryMode, EdgeUniforms, ExplorationLimits, QuadratureSpec,
    ResourceCaps, RngStream, Window,
};

fn graph_construction(c: &mut Criterion) {
    let model = gilbert(2, 0.5);
    let caps = ResourceCaps::default();
    let mut group = c.benchmark_group("build_graph");
    for side in [20.0, 40.0, 80.0] {
        let window = Window::cube(2, side, BoundaryMode::Torus).unwrap();
        let config = sample_poisson(&window, 1.0, model.marks(), &caps, &mut RngStream::new(1, 0).rng()).unwrap();
        let uniforms = EdgeUniforms::new(7);
        group.bench_with_input(BenchmarkId::from_parameter(config.len()), &config, |b, config| {
            b.iter(|| build_graph_with(config, &model, &uniforms, &caps, None).unwrap().edge_count())
        });
    }
    group.finish();
}

fn union_find(c: &mut Criterion) {
    let n = 1 << 16;
    // fixed pseudo-random pairs
    let pairs: Vec<(usize, usize)> = (0..n as u64)
        .map(|i| {
            let h = rcmlab_core::rng::mix64(i);
            ((h as usize) % n, ((h >> 32) as usize) % n)
        })
        .collect();
    c.bench_function("union_find_65536", |b| {
        b.iter(|| {
            let mut sets = DisjointSets::new(n);
            for &(a, z) in &pairs {
                sets.union(a, z);
            }
            black_box(sets.component_count())
        })
    });
}

fn exploration(c: &mut Criterion) {
    let model = gilbert(2, 0.5);
    let limits = ExplorationLimits::with_max_vertices(10_000);
    let mut group = c.benchmark_group("explore_typical");
    for t in [0.5, 1.0, 1.3] {
        group.bench_with_input(BenchmarkId::from_parameter(t), &t, |b, &t| {
            let mut i = 0u64;
            b.iter(|| {
                i += 1;
                explore_typical(t, &model, &limits, &mut RngStream::new(3, i).rng()).unwrap().size()
            })
        });
    }
    group.finish();
}

fn phi_lambda(c: &mut Criterion) {
    let model = gilbert(2, 0.5);
    let limits = ExplorationLimits::with_max_vertices(10_000);
    let spec = QuadratureSpec::default();
    // the first finite cluster with at least 50 members
    let cluster = (0..)
        .map(|i| explore_typical(1.2, &model, &limits, &mut RngStream::new(4, i).rng()).unwrap())
        .find(|c| !c.is_truncated() && c.size() >= 50)
        .unwrap();
    c.bench_function(&format!("phi_lambda_size_{}", cluster.size()), |b| {
        b.iter(|| {
            let mut local = cluster.clone();
            local.compute_phi_lambda(&model, &spec, &mut RngStream::new(5, 0).rng()).unwrap().value
        })
    });
}

criterion_group!(benches, graph_construction, union_find, exploration, phi_lambda);
criterion_main!(benches);
