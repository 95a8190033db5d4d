use std::f64::consts::PI;

use nalgebra::Vector3;
use proptest::prelude::*;

use windroute::dubins::{dubins_shortest, Pose};
use windroute::energy::{edge_energy, EnergyParams};
use windroute::fleet::{
    improving_swap, kmeans_cluster, partition_customers, tour_length, truck_tsp, Customer, DroneSpec, Service,
};
use windroute::graph::{edge_cost, generate_er, shortest_path, ErArea, COST_FLOOR_FRACTION};
use windroute::wind::{solve_wind_triangle, Feasibility, KinematicLimits, WindClassifier, WindVector};

fn unit_dir() -> impl Strategy<Value = Vector3<f64>> {
    (0.0..2.0 * PI, -0.3f64..0.3).prop_map(|(h, g)| Vector3::new(g.cos() * h.cos(), g.cos() * h.sin(), g.sin()))
}

fn wind() -> impl Strategy<Value = WindVector> {
    (0.0f64..20.0, 0.0..2.0 * PI).prop_map(|(s, d)| WindVector::new(s, d))
}

fn points(max: usize) -> impl Strategy<Value = Vec<[f64; 2]>> {
    prop::collection::vec((-500.0f64..500.0, -500.0f64..500.0).prop_map(|(x, y)| [x, y]), 1..max)
}

proptest! {
    #[test]
    fn airspeed_is_conserved(u in unit_dir(), w in wind(), va in 5.0f64..25.0) {
        let lim = KinematicLimits::default().with_airspeed(va);
        let s = solve_wind_triangle(&u, &lim, &w);
        if s.feasibility == Feasibility::Feasible {
            let air = u * s.ground_speed - w.to_cartesian();
            prop_assert!((air.norm() - va).abs() < 1e-9);
            prop_assert!(s.ground_speed > 0.0);
        }
    }

    #[test]
    fn stronger_headwind_slows(cross in 0.0f64..10.0, head in 0.0f64..10.0, extra in 0.01f64..5.0) {
        let u = Vector3::new(1.0, 0.0, 0.0);
        let lim = KinematicLimits::default();
        let vg = |h: f64| {
            let w = WindVector::from_cartesian(&Vector3::new(-h, cross, 0.0));
            solve_wind_triangle(&u, &lim, &w).ground_speed
        };
        prop_assert!(vg(head + extra) < vg(head));
    }

    #[test]
    fn reversal_symmetry(u in unit_dir(), w in wind()) {
        let lim = KinematicLimits { gamma_min: -1.5, gamma_max: 1.5, ..KinematicLimits::default() };
        let a = solve_wind_triangle(&u, &lim, &w);
        let flipped = WindVector::from_cartesian(&-w.to_cartesian());
        let b = solve_wind_triangle(&-u, &lim, &flipped);
        prop_assert_eq!(a.feasibility.is_feasible(), b.feasibility.is_feasible());
        if a.feasibility.is_feasible() {
            prop_assert!((a.ground_speed - b.ground_speed).abs() < 1e-9);
        }
    }

    #[test]
    fn classes_roundtrip(dir in 0.0..2.0 * PI, speed in 0.0f64..12.0, eight in any::<bool>()) {
        let k = if eight { 8 } else { 4 };
        let c = WindClassifier::new(k, vec![0.0, 3.0, 6.0, 9.0]).unwrap();
        let class = c.classify(&WindVector::new(speed, dir));
        prop_assert!(class.index < k);
        prop_assert_eq!(c.classify(&c.representative(&class)), class);
    }

    #[test]
    fn synthetic_distance_respects_floor(w in wind(), lambda in 0.0f64..5.0, seed in 0u64..50) {
        let g = generate_er(6, 0.5, ErArea { x_max: 800.0, y_max: 800.0, z_min: 0.0, z_max: 20.0 }, seed).unwrap();
        let lim = KinematicLimits::default();
        let p = EnergyParams::default();
        for e in g.edges() {
            let c = edge_cost(e, &w, lambda, &lim, &p);
            prop_assert!(c >= COST_FLOOR_FRACTION * e.length);
        }
    }

    #[test]
    fn headwind_costs_more_than_calm(len in 10.0f64..2000.0, speed in 0.5f64..9.0) {
        let u = Vector3::new(1.0, 0.0, 0.0);
        let lim = KinematicLimits::default();
        let p = EnergyParams::default();
        let calm = edge_energy(len, &u, &WindVector::calm(), &lim, &p);
        let head = edge_energy(len, &u, &WindVector::new(speed, PI), &lim, &p);
        let tail = edge_energy(len, &u, &WindVector::new(speed, 0.0), &lim, &p);
        prop_assert!(head.energy > calm.energy && calm.energy > tail.energy && tail.energy > 0.0);
    }

    #[test]
    fn dijkstra_beats_any_walk(seed in 0u64..500, hops in prop::collection::vec(0usize..100, 1..6)) {
        let g = generate_er(12, 0.2, ErArea::default(), seed).unwrap();
        let cost = |e: usize| g.edge(e).length;
        // follow an arbitrary walk from the depot and compare against its end
        let mut v = g.depot();
        let mut walked = 0.0;
        for h in hops {
            let out = g.out_edges(v);
            let e = out[h % out.len()];
            walked += cost(e);
            v = g.edge(e).to;
        }
        let best = shortest_path(&g, cost, g.depot(), v).unwrap();
        prop_assert!(best.total <= walked + 1e-9);
        prop_assert_eq!(best.vertices.first(), Some(&g.depot()));
        prop_assert_eq!(best.vertices.last(), Some(&v));
    }

    #[test]
    fn dubins_no_shorter_than_chord(
        a in (-500.0f64..500.0, -500.0f64..500.0, 0.0..2.0 * PI),
        b in (-500.0f64..500.0, -500.0f64..500.0, 0.0..2.0 * PI),
        r in 10.0f64..200.0,
        shift in (-300.0f64..300.0, -300.0f64..300.0),
    ) {
        let (p, q) = (Pose::new(a.0, a.1, a.2), Pose::new(b.0, b.1, b.2));
        let len = dubins_shortest(&p, &q, r).length();
        prop_assert!(len >= p.distance(&q) - 1e-9);
        let moved = dubins_shortest(
            &Pose::new(a.0 + shift.0, a.1 + shift.1, a.2),
            &Pose::new(b.0 + shift.0, b.1 + shift.1, b.2),
            r,
        ).length();
        prop_assert!((moved - len).abs() < 1e-6 * r);
    }

    #[test]
    fn tsp_tour_is_two_opt_optimal(nodes in points(14)) {
        let order = truck_tsp(&nodes);
        let mut sorted = order.clone();
        sorted.sort_unstable();
        prop_assert_eq!(sorted, (0..nodes.len()).collect::<Vec<_>>());
        prop_assert_eq!(order[0], 0);
        prop_assert!(improving_swap(&nodes, &order).is_none());
        prop_assert!(tour_length(&nodes, &order).is_finite());
    }

    #[test]
    fn kmeans_wcss_never_rises(pts in points(40), k in 1usize..5, seed in any::<u64>()) {
        let k = k.min(pts.len());
        let km = kmeans_cluster(&pts, k, seed, 100);
        prop_assert_eq!(km.labels.len(), pts.len());
        prop_assert!(km.labels.iter().all(|&l| l < k));
        for w in km.wcss.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-6 * w[0].max(1.0));
        }
    }

    #[test]
    fn partition_is_exhaustive(
        specs in prop::collection::vec((0.0f64..2000.0, 0.0f64..2000.0, 0.0f64..12.0, any::<bool>()), 0..15),
        seed in 0u64..100,
    ) {
        let g = generate_er(15, 0.3, ErArea { x_max: 2000.0, y_max: 2000.0, z_min: 0.0, z_max: 0.0 }, seed).unwrap();
        let customers: Vec<Customer> = specs
            .iter()
            .enumerate()
            .map(|(i, &(x, y, m, truck))| Customer {
                id: 100 + i,
                x,
                y,
                z: 0.0,
                payload: m,
                service: if truck { Service::TruckOnly } else { Service::DroneCapable },
            })
            .collect();
        let spec = DroneSpec { capacity: 8.0, speed: 15.0, battery: 50.0 };
        let (truck, drone) =
            partition_customers(&customers, &spec, &g, &KinematicLimits::default(), &EnergyParams::default());
        prop_assert_eq!(truck.len() + drone.len(), customers.len());
        for c in &customers {
            let in_truck = truck.contains(&c.id);
            prop_assert!(in_truck != drone.contains(&c.id));
            if c.service == Service::TruckOnly || c.payload > spec.capacity {
                prop_assert!(in_truck);
            }
        }
    }
}
