//! Shared fixtures for the routing benchmarks.

use windroute::executor::{Mission, Prepared, Scenario};
use windroute::harness::{make_instance, Config};
use windroute::planner::{PlannerConfig, PlannerKind};

pub struct Fixture {
    pub scenario: Scenario,
    pub prepared: Prepared,
    pub planner: PlannerConfig,
    pub mission: Mission,
}

/// One benchmark instance with the default configuration.
pub fn fixture(seed: u64, planner: PlannerKind) -> Fixture {
    let cfg = Config::default();
    let inst = make_instance(&cfg, seed, None).expect("default instance");
    let scenario = inst.scenario(&cfg, 8).expect("default scenario");
    let planner = cfg.planner.with_planner(planner);
    let depot = scenario.graph.depot();
    let prepared = Prepared::new(&scenario, depot, &planner, 0.0);
    let mission = Mission::new(depot, inst.target, 100.0);
    Fixture {
        scenario,
        prepared,
        planner,
        mission,
    }
}

/// Planar vertex positions of a fixture graph.
pub fn positions(f: &Fixture) -> Vec<[f64; 2]> {
    f.scenario
        .graph
        .vertices()
        .iter()
        .map(|v| [v.position.x, v.position.y])
        .collect()
}
