use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use ccbs_bench::{crossing, open_instance};
use ccbs_core::geometry::first_collision_time;
use ccbs_core::sipp::{self, precompute_heuristic};
use ccbs_core::{solve, ConflictHeuristic, MotionSegment, Point2, SolverConfig};

fn geometry(c: &mut Criterion) {
    let a = MotionSegment::linear(Point2::new(0.0, 0.0), Point2::new(4.0, 0.0), 0.0, 4.0);
    let b = MotionSegment::linear(Point2::new(2.0, -2.0), Point2::new(2.0, 2.0), 0.5, 4.0);
    c.bench_function("first_collision_time", |bench| {
        bench.iter(|| first_collision_time(black_box(&a), black_box(&b), 0.7))
    });
}

fn single_agent(c: &mut Criterion) {
    let inst = open_instance(32, 3, 1, 0);
    let agent = &inst.agents[0];
    let heuristic = precompute_heuristic(&inst.graph, agent.goal, agent.speed);
    c.bench_function("sipp_32x32_k3", |bench| {
        bench.iter(|| sipp::plan(&inst.graph, agent, &[], &heuristic))
    });
}

fn full_search(c: &mut Criterion) {
    let fig = crossing();
    let fine = SolverConfig {
        sweep_resolution: 0.01,
        ..SolverConfig::default()
    };
    c.bench_function("ccbs_crossing", |bench| bench.iter(|| solve(&fig, &fine).unwrap()));

    let mut group = c.benchmark_group("ccbs_10x10_6_agents");
    group.sample_size(10);
    for k in [2, 3] {
        let inst = open_instance(10, k, 6, 1);
        for h in [ConflictHeuristic::Vanilla, ConflictHeuristic::Hybrid] {
            let config = SolverConfig::default().with_heuristic(h);
            group.bench_with_input(BenchmarkId::new(h.name(), k), &inst, |bench, inst| {
                bench.iter(|| solve(inst, &config).unwrap())
            });
        }
    }
    group.finish();
}

criterion_group!(benches, geometry, single_agent, full_search);
criterion_main!(benches);
