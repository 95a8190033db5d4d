//! Closed-loop mission execution under realized wind.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::dubins::{chord_clear, Obstacle};
use crate::energy::{edge_energy, EdgeTraversal, EnergyParams};
use crate::error::{config, Result};
use crate::graph::{CostSnapshot, ReturnCosts, TimeGraph};
use crate::planner::{
    return_ok, CostModel, Decision, MissionState, Planner, PlannerConfig, PlannerKind, RiskModel, StepCosts,
    StepView,
};
use crate::trajectory::{polyline_route, refine_route, TrajectoryParams};
use crate::wind::{
    update_estimate, KinematicLimits, WindClassifier, WindEstimate, WindProcess, WindSampler, WindVector,
};

/// Wind processes bound to the graph: one per region, each vertex in one
/// region. A single region is the global binding.
#[derive(Debug, Clone, PartialEq)]
pub struct WindField {
    processes: Vec<WindProcess>,
    region: Vec<usize>,
}

impl WindField {
    pub fn global(process: WindProcess, vertex_count: usize) -> Self {
        Self {
            processes: vec![process],
            region: vec![0; vertex_count],
        }
    }

    pub fn regional(processes: Vec<WindProcess>, region: Vec<usize>) -> Result<Self> {
        if processes.is_empty() {
            return config("wind field needs at least one process");
        }
        if region.iter().any(|&r| r >= processes.len()) {
            return config("vertex bound to a missing wind region");
        }
        Ok(Self { processes, region })
    }

    pub fn process_at(&self, v: usize) -> &WindProcess {
        &self.processes[self.region[v]]
    }

    pub fn max_speed(&self) -> f64 {
        self.processes.iter().map(WindProcess::max_speed).fold(0.0, f64::max)
    }

    pub fn sampler(&self, seed: u64) -> FieldSampler<'_> {
        FieldSampler {
            samplers: self
                .processes
                .iter()
                .enumerate()
                .map(|(i, p)| p.sampler(seed ^ (i as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)))
                .collect(),
            region: &self.region,
        }
    }
}

pub struct FieldSampler<'a> {
    samplers: Vec<WindSampler<'a>>,
    region: &'a [usize],
}

impl FieldSampler<'_> {
    pub fn wind_at(&mut self, v: usize, t: f64) -> WindVector {
        self.samplers[self.region[v]].wind_at(t)
    }
}

/// Static inputs shared by every mission on one instance.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub graph: TimeGraph,
    pub wind: WindField,
    /// Class structure used for the risk term under log replay.
    pub classes: WindClassifier,
    pub energy: EnergyParams,
    pub limits: KinematicLimits,
    pub trajectory: TrajectoryParams,
    pub obstacles: Vec<Obstacle>,
}

/// One delivery sortie.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mission {
    pub depot: usize,
    pub target: usize,
    /// Initial budget, Wh.
    pub budget: f64,
    pub payload: f64,
    /// Wall-clock launch time, s.
    pub start_time: f64,
}

impl Mission {
    pub fn new(depot: usize, target: usize, budget: f64) -> Self {
        Self {
            depot,
            target,
            budget,
            payload: 0.0,
            start_time: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Outcome {
    #[serde(rename = "SUC")]
    Suc,
    #[serde(rename = "DEL")]
    Del,
    #[serde(rename = "FAIL")]
    Fail,
    #[serde(rename = "ABRT")]
    Abrt,
}

impl Outcome {
    pub const ALL: [Outcome; 4] = [Outcome::Suc, Outcome::Del, Outcome::Fail, Outcome::Abrt];

    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::Suc => "SUC",
            Outcome::Del => "DEL",
            Outcome::Fail => "FAIL",
            Outcome::Abrt => "ABRT",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Outcome::ALL.into_iter().find(|o| o.as_str() == s)
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Why a mission ended the way it did.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Reason {
    Returned,
    MarginBroken,
    Timeout,
    Depleted,
    Stuck,
    Aborted,
    AbortDepleted,
    Unreachable,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MissionRecord {
    pub seed: u64,
    pub planner: PlannerKind,
    pub b0: f64,
    pub k: usize,
    pub lambda: f64,
    pub outcome: Outcome,
    pub reason: Reason,
    pub energy_wh: f64,
    pub margin_wh: f64,
    pub time_s: f64,
    pub steps: usize,
    pub max_turn_deg: f64,
    pub b_end: f64,
    /// Visited vertices, starting at the depot.
    pub path: Vec<usize>,
    /// Traversed edges.
    pub edges: Vec<usize>,
    /// Energy debited per traversed edge, Wh.
    pub debits: Vec<f64>,
    /// Arrival time at each path vertex, relative to launch.
    pub arrivals: Vec<f64>,
}

/// Per-instance data derived once and reused across missions from the same
/// depot: worst-case return prices, calm energies and blocked edges.
#[derive(Debug, Clone, PartialEq)]
pub struct Prepared {
    pub returns: ReturnCosts,
    pub calm: Vec<f64>,
    pub blocked: Vec<bool>,
}

impl Prepared {
    pub fn new(scenario: &Scenario, depot: usize, cfg: &PlannerConfig, payload: f64) -> Self {
        let g = &scenario.graph;
        let params = scenario.energy.with_payload(payload);
        let worst = cfg.worst_wind.unwrap_or_else(|| scenario.classes.max_magnitude());
        let returns = ReturnCosts::new(g, depot, worst, &scenario.limits, &params);
        let calm = g
            .edges()
            .iter()
            .map(|e| edge_energy(e.length, &e.direction, &WindVector::calm(), &scenario.limits, &params).energy)
            .collect();
        let blocked = g
            .edges()
            .iter()
            .map(|e| {
                let a = g.vertex(e.from).position;
                let b = g.vertex(e.to).position;
                !chord_clear(
                    (a.x, a.y),
                    (b.x, b.y),
                    &scenario.obstacles,
                    scenario.trajectory.step,
                    scenario.trajectory.clearance,
                )
            })
            .collect();
        Self {
            returns,
            calm,
            blocked,
        }
    }
}

/// Flies edge `e` from the current vertex under `wind`. An unflyable edge
/// leaves the state untouched and returns the infeasible traversal.
pub fn traverse_edge(
    state: &mut MissionState,
    g: &TimeGraph,
    e: usize,
    wind: &WindVector,
    limits: &KinematicLimits,
    params: &EnergyParams,
) -> EdgeTraversal {
    let edge = g.edge(e);
    assert_eq!(edge.from, state.vertex, "edge {e} does not leave vertex {}", state.vertex);
    let tr = edge_energy(edge.length, &edge.direction, wind, limits, params);
    if tr.is_feasible() {
        state.budget -= tr.energy;
        state.t_sim += tr.time;
        state.vertex = edge.to;
        state.path.push(edge.to);
    }
    tr
}

struct Run<'a> {
    scenario: &'a Scenario,
    params: EnergyParams,
    state: MissionState,
    edges: Vec<usize>,
    debits: Vec<f64>,
    arrivals: Vec<f64>,
}

impl Run<'_> {
    fn fly(&mut self, e: usize, wind: &WindVector) -> bool {
        let tr = traverse_edge(
            &mut self.state,
            &self.scenario.graph,
            e,
            wind,
            &self.scenario.limits,
            &self.params,
        );
        if tr.is_feasible() {
            self.edges.push(e);
            self.debits.push(tr.energy);
            self.arrivals.push(self.state.t_sim);
        }
        tr.is_feasible()
    }
}

/// Simulates one mission to its outcome. Deterministic in its inputs.
pub fn run_mission(
    scenario: &Scenario,
    prepared: &Prepared,
    mission: &Mission,
    cfg: &PlannerConfig,
    seed: u64,
) -> MissionRecord {
    let g = &scenario.graph;
    let params = scenario.energy.with_payload(mission.payload);
    let risk = match scenario.wind.process_at(mission.depot) {
        WindProcess::Markov(m) => RiskModel::Markov(m.clone()),
        WindProcess::LogReplay { .. } => RiskModel::Classes(scenario.classes.clone()),
    };
    let model = CostModel {
        limits: &scenario.limits,
        energy: &params,
        risk: &risk,
        lambda: cfg.lambda,
        mode: cfg.uncertainty,
        cap: cfg.unc_cap,
    };
    let mut wind = scenario.wind.sampler(seed);
    let mut planner = Planner::new(*cfg);
    let mut run = Run {
        scenario,
        params,
        state: MissionState::new(mission.depot, mission.budget),
        edges: Vec::new(),
        debits: Vec::new(),
        arrivals: vec![0.0],
    };
    run.state.delivered = mission.target == mission.depot;
    let mut estimate: Option<WindEstimate> = None;

    let (outcome, reason) = loop {
        let state = &run.state;
        if state.delivered && state.vertex == mission.depot {
            break if state.margin_broken {
                (Outcome::Del, Reason::MarginBroken)
            } else {
                (Outcome::Suc, Reason::Returned)
            };
        }
        if state.t_step >= cfg.t_max {
            break if state.delivered && state.budget >= 0.0 {
                (Outcome::Del, Reason::Timeout)
            } else {
                (Outcome::Fail, Reason::Timeout)
            };
        }
        let v = state.vertex;
        let observed = wind.wind_at(v, mission.start_time + state.t_sim);
        let est = match estimate {
            None => WindEstimate::new(observed, state.t_sim, cfg.alpha),
            Some(prev) => update_estimate(&prev, &observed, state.t_sim),
        };
        estimate = Some(est);

        if cfg.planner == PlannerKind::Ser && state.t_step == 0 && run.edges.is_empty() {
            let c0 = CostSnapshot::build(g, state.t_sim, |_| est.vector, cfg.lambda, &scenario.limits, &params);
            match crate::planner::plan_ser(g, &c0, mission.depot, mission.target) {
                Some(route) => planner.commit(route),
                None => break (Outcome::Abrt, Reason::Unreachable),
            }
        }
        let costs = if cfg.planner == PlannerKind::Ser {
            StepCosts {
                energy: Vec::new(),
                unc: Vec::new(),
                surrogate: Vec::new(),
            }
        } else {
            model.step_costs(g, &est.vector)
        };
        let decision = planner.decide(&StepView {
            graph: g,
            state: &run.state,
            costs: &costs,
            returns: &prepared.returns,
            calm: &prepared.calm,
            blocked: &prepared.blocked,
            target: mission.target,
            cfg,
        });
        match decision {
            Decision::Traverse(e) => {
                run.state.t_step += 1;
                // wind is sampled at edge entry and held for the edge
                if !run.fly(e, &observed) {
                    continue;
                }
                planner.advanced();
                let state = &mut run.state;
                if state.budget < 0.0 {
                    break (Outcome::Fail, Reason::Depleted);
                }
                if state.vertex == mission.target {
                    state.delivered = true;
                }
                if state.delivered && !margin_holds(state.budget, state.vertex, &prepared.returns, cfg) {
                    state.margin_broken = true;
                }
            }
            Decision::Stuck => break (Outcome::Fail, Reason::Stuck),
            Decision::Abort => break fly_home(&mut run, &mut wind, &prepared.returns, mission),
        }
    };
    let state = &run.state;
    let max_turn_deg = executed_turn(scenario, &state.path, cfg);
    MissionRecord {
        seed,
        planner: cfg.planner,
        b0: mission.budget,
        k: scenario.classes.k(),
        lambda: cfg.lambda,
        outcome,
        reason,
        energy_wh: mission.budget - state.budget,
        margin_wh: state.budget.max(0.0),
        time_s: state.t_sim,
        steps: state.t_step,
        max_turn_deg,
        b_end: state.budget,
        path: state.path.clone(),
        edges: run.edges,
        debits: run.debits,
        arrivals: run.arrivals,
    }
}

fn margin_holds(budget: f64, v: usize, returns: &ReturnCosts, cfg: &PlannerConfig) -> bool {
    let gated = PlannerConfig {
        ablations: crate::planner::Ablations {
            budget_gate: true,
            ..cfg.ablations
        },
        ..*cfg
    };
    return_ok(budget, v, returns, &gated)
}

/// The gate-free conservative return after an abort.
fn fly_home(run: &mut Run<'_>, wind: &mut FieldSampler<'_>, returns: &ReturnCosts, mission: &Mission) -> (Outcome, Reason) {
    let route = returns.return_path(&run.scenario.graph, run.state.vertex);
    if route.is_empty() && run.state.vertex != mission.depot {
        return (Outcome::Fail, Reason::Stuck);
    }
    for e in route {
        let w = wind.wind_at(run.state.vertex, mission.start_time + run.state.t_sim);
        run.state.t_step += 1;
        if !run.fly(e, &w) {
            return (Outcome::Fail, Reason::Stuck);
        }
        if run.state.budget < 0.0 {
            return (Outcome::Fail, Reason::AbortDepleted);
        }
    }
    (Outcome::Abrt, Reason::Aborted)
}

fn executed_turn(scenario: &Scenario, path: &[usize], cfg: &PlannerConfig) -> f64 {
    if path.len() < 2 {
        return 0.0;
    }
    let points: Vec<(f64, f64)> = path
        .iter()
        .map(|&v| {
            let p = scenario.graph.vertex(v).position;
            (p.x, p.y)
        })
        .collect();
    let route = if cfg.ablations.traj_opt {
        refine_route(&points, scenario.limits.turn_radius(), &scenario.trajectory, &scenario.obstacles)
    } else {
        polyline_route(&points, &scenario.trajectory, &scenario.obstacles)
    };
    route.max_turn
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{Vertex, VertexKind};
    use nalgebra::Vector3;
    use std::f64::consts::PI;

    fn vertex(id: usize, x: f64, y: f64) -> Vertex {
        Vertex {
            id,
            position: Vector3::new(x, y, 0.0),
            kind: if id == 0 { VertexKind::Depot } else { VertexKind::Waypoint },
        }
    }

    fn line_scenario(wind: WindVector) -> Scenario {
        let vs = vec![vertex(0, 0.0, 0.0), vertex(1, 300.0, 0.0), vertex(2, 600.0, 0.0)];
        let graph = TimeGraph::new(vs, &[(0, 1), (1, 0), (1, 2), (2, 1)]).unwrap();
        Scenario {
            wind: WindField::global(WindProcess::constant(wind), 3),
            graph,
            classes: WindClassifier::new(4, vec![0.0, 3.0, 6.0, 9.0]).unwrap(),
            energy: EnergyParams::default(),
            limits: KinematicLimits::default(),
            trajectory: TrajectoryParams::default(),
            obstacles: Vec::new(),
        }
    }

    #[test]
    fn traverse_calm_edge() {
        let s = line_scenario(WindVector::calm());
        let mut st = MissionState::new(0, 1.0);
        let tr = traverse_edge(&mut st, &s.graph, 0, &WindVector::calm(), &s.limits, &s.energy);
        assert_eq!(tr.time, 20.0);
        assert!((1.0 - st.budget - 500.0 / 3600.0).abs() < 1e-12);
        assert_eq!(st.t_sim, 20.0);
        assert_eq!(st.path, vec![0, 1]);
    }

    #[test]
    fn unflyable_edge_leaves_state() {
        let s = line_scenario(WindVector::calm());
        let mut st = MissionState::new(0, 1.0);
        let tr = traverse_edge(&mut st, &s.graph, 0, &WindVector::new(16.0, PI / 2.0), &s.limits, &s.energy);
        assert!(!tr.is_feasible());
        assert_eq!(st, MissionState::new(0, 1.0));
    }

    #[test]
    fn benign_missions_succeed() {
        let s = line_scenario(WindVector::calm());
        for kind in [PlannerKind::Ser, PlannerKind::Rer, PlannerKind::Ber] {
            let cfg = PlannerConfig::default().with_planner(kind);
            let prep = Prepared::new(&s, 0, &cfg, 0.0);
            let r = run_mission(&s, &prep, &Mission::new(0, 2, 50.0), &cfg, 1);
            assert_eq!(r.outcome, Outcome::Suc, "{kind}");
            assert_eq!(r.path, vec![0, 1, 2, 1, 0]);
            assert_eq!(r.steps, 4);
            let sum: f64 = r.debits.iter().sum();
            assert!((r.energy_wh - sum).abs() < 1e-9);
            assert!((r.time_s - 80.0).abs() < 1e-9);
            assert!(r.max_turn_deg < 11.5, "{}", r.max_turn_deg);
        }
        let raw = PlannerConfig {
            ablations: crate::planner::Ablations {
                traj_opt: false,
                ..Default::default()
            },
            ..PlannerConfig::default()
        };
        let prep = Prepared::new(&s, 0, &raw, 0.0);
        let r = run_mission(&s, &prep, &Mission::new(0, 2, 50.0), &raw, 1);
        assert!((r.max_turn_deg - 180.0).abs() < 1e-9, "U-turn at the target");
    }

    #[test]
    fn tight_budget_aborts_at_depot() {
        let s = line_scenario(WindVector::calm());
        let cfg = PlannerConfig::default();
        let prep = Prepared::new(&s, 0, &cfg, 0.0);
        let ret1 = prep.returns.cost(1);
        let r = run_mission(&s, &prep, &Mission::new(0, 2, 1.5 * ret1 + 0.01), &cfg, 1);
        assert_eq!(r.outcome, Outcome::Abrt);
        assert_eq!(r.path, vec![0]);
        assert_eq!(r.energy_wh, 0.0);
    }

    #[test]
    fn depletion_is_failure() {
        let s = line_scenario(WindVector::calm());
        let cfg = PlannerConfig::default().with_planner(PlannerKind::Rer);
        let prep = Prepared::new(&s, 0, &cfg, 0.0);
        let r = run_mission(&s, &prep, &Mission::new(0, 2, 0.2), &cfg, 1);
        assert_eq!(r.outcome, Outcome::Fail);
        assert_eq!(r.reason, Reason::Depleted);
        assert!(r.b_end < 0.0 && r.margin_wh == 0.0);
    }

    #[test]
    fn margin_break_downgrades_to_del() {
        let s = line_scenario(WindVector::calm());
        let cfg = PlannerConfig::default().with_planner(PlannerKind::Rer);
        let prep = Prepared::new(&s, 0, &cfg, 0.0);
        // enough for the calm round trip, short of the return margin at the target
        let r = run_mission(&s, &prep, &Mission::new(0, 2, 4.0 * 500.0 / 3600.0 + 0.01), &cfg, 1);
        assert_eq!(r.outcome, Outcome::Del);
        assert_eq!(r.reason, Reason::MarginBroken);
    }

    #[test]
    fn ger_oscillation_times_out() {
        // blowing toward the depot, so 1 -> 0 is always the cheapest move
        let s = line_scenario(WindVector::new(5.0, PI));
        let cfg = PlannerConfig {
            t_max: 20,
            ..PlannerConfig::default().with_planner(PlannerKind::Ger)
        };
        let prep = Prepared::new(&s, 0, &cfg, 0.0);
        let r = run_mission(&s, &prep, &Mission::new(0, 2, 100.0), &cfg, 1);
        assert_eq!(r.outcome, Outcome::Fail);
        assert_eq!(r.reason, Reason::Timeout);
        assert_eq!(r.steps, 20);
    }
}
