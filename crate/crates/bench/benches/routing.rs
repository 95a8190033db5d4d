use std::f64::consts::PI;

use criterion::{black_box, criterion_group, criterion_main, Criterion};
use nalgebra::Vector3;

use windroute::dubins::{dubins_shortest, Pose};
use windroute::energy::edge_energy;
use windroute::executor::run_mission;
use windroute::fleet::{kmeans_cluster, truck_tsp};
use windroute::graph::{shortest_path, CostSnapshot};
use windroute::planner::PlannerKind;
use windroute::wind::{solve_wind_triangle, WindVector};
use windroute_bench::{fixture, positions};

fn kernels(c: &mut Criterion) {
    let f = fixture(1, PlannerKind::Ber);
    let dir = Vector3::new(0.6, 0.8, 0.0);
    let wind = WindVector::new(7.0, 2.0);
    let limits = f.scenario.limits;
    let energy = f.scenario.energy;

    c.bench_function("wind_triangle", |b| {
        b.iter(|| solve_wind_triangle(black_box(&dir), &limits, black_box(&wind)))
    });
    c.bench_function("edge_energy", |b| {
        b.iter(|| edge_energy(black_box(420.0), &dir, black_box(&wind), &limits, &energy))
    });
    c.bench_function("dubins_shortest", |b| {
        let (p, q) = (Pose::new(0.0, 0.0, 0.3), Pose::new(800.0, -350.0, PI));
        b.iter(|| dubins_shortest(black_box(&p), black_box(&q), 150.0))
    });

    let g = &f.scenario.graph;
    c.bench_function("cost_snapshot_er60", |b| {
        b.iter(|| CostSnapshot::build(g, 0.0, |_| wind, 1.5, &limits, &energy))
    });
    let snap = CostSnapshot::build(g, 0.0, |_| wind, 1.5, &limits, &energy);
    c.bench_function("shortest_path_er60", |b| {
        b.iter(|| shortest_path(g, |e| snap.synthetic(e), g.depot(), black_box(f.mission.target)))
    });
}

fn missions(c: &mut Criterion) {
    let mut group = c.benchmark_group("mission");
    for kind in PlannerKind::ALL {
        let f = fixture(3, kind);
        group.bench_function(kind.as_str(), |b| {
            b.iter(|| run_mission(&f.scenario, &f.prepared, &f.mission, &f.planner, black_box(7)))
        });
    }
    group.finish();
}

fn allocation(c: &mut Criterion) {
    let pts = positions(&fixture(5, PlannerKind::Ber));
    c.bench_function("truck_tsp_60", |b| b.iter(|| truck_tsp(black_box(&pts))));
    c.bench_function("kmeans_60_k4", |b| b.iter(|| kmeans_cluster(black_box(&pts), 4, 9, 100)));
}

criterion_group!(benches, kernels, missions, allocation);
criterion_main!(benches);
