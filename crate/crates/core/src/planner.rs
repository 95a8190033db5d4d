//! The four routing policies behind one per-step decision contract.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::energy::{edge_energy, EnergyParams};
use crate::error::{config, Error, Result};
use crate::graph::{
    constrained_distance, costs_to, shortest_path, surrogate_cost, uncertainty, CostSnapshot, ReturnCosts, TimeGraph,
    UncertaintyMode, UncertaintySource,
};
use crate::wind::{KinematicLimits, MarkovWind, WindClassifier, WindVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PlannerKind {
    #[serde(rename = "SER")]
    Ser,
    #[serde(rename = "RER")]
    Rer,
    #[serde(rename = "GER")]
    Ger,
    #[serde(rename = "BER")]
    Ber,
}

impl PlannerKind {
    pub const ALL: [PlannerKind; 4] = [PlannerKind::Ser, PlannerKind::Rer, PlannerKind::Ger, PlannerKind::Ber];

    pub fn as_str(self) -> &'static str {
        match self {
            PlannerKind::Ser => "SER",
            PlannerKind::Rer => "RER",
            PlannerKind::Ger => "GER",
            PlannerKind::Ber => "BER",
        }
    }
}

impl fmt::Display for PlannerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PlannerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PlannerKind::ALL
            .into_iter()
            .find(|k| k.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Config(format!("unknown planner `{s}`")))
    }
}

/// Component switches for ablation runs; all on by default.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Ablations {
    pub budget_gate: bool,
    pub wind_costs: bool,
    pub risk_term: bool,
    pub traj_opt: bool,
}

impl Default for Ablations {
    fn default() -> Self {
        Self {
            budget_gate: true,
            wind_costs: true,
            risk_term: true,
            traj_opt: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlannerConfig {
    pub planner: PlannerKind,
    pub lambda: f64,
    pub kappa_ret: f64,
    pub tau: f64,
    pub t_max: usize,
    /// 0 screens infeasible and blocked edges out, 1 keeps them priced.
    pub flag: u8,
    pub alpha: f64,
    /// Headwind used for return pricing; the process maximum when unset.
    pub worst_wind: Option<f64>,
    pub uncertainty: UncertaintyMode,
    /// Wh charged for a one-step deviation that makes an edge unflyable.
    pub unc_cap: f64,
    pub ablations: Ablations,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            planner: PlannerKind::Ber,
            lambda: 1.5,
            kappa_ret: 1.5,
            tau: 0.1,
            t_max: 200,
            flag: 0,
            alpha: 0.5,
            worst_wind: None,
            uncertainty: UncertaintyMode::WorstCase,
            unc_cap: 10.0,
            ablations: Ablations::default(),
        }
    }
}

impl PlannerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return config("lambda must be finite and non-negative");
        }
        if !(self.kappa_ret > 1.0) {
            return config("kappa_ret must exceed 1");
        }
        if !(self.tau >= 0.0) {
            return config("tau must be non-negative");
        }
        if self.t_max < 1 {
            return config("t_max must be at least 1");
        }
        if self.flag > 1 {
            return config("flag must be 0 or 1");
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return config("alpha must lie in [0, 1]");
        }
        if let Some(w) = self.worst_wind {
            if !(w >= 0.0) {
                return config("worst_wind must be non-negative");
            }
        }
        if !(self.unc_cap >= 0.0) {
            return config("unc_cap must be non-negative");
        }
        Ok(())
    }

    pub fn with_planner(mut self, planner: PlannerKind) -> Self {
        self.planner = planner;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    Traverse(usize),
    Abort,
    Stuck,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MissionState {
    /// Remaining budget, Wh.
    pub budget: f64,
    pub vertex: usize,
    pub delivered: bool,
    pub path: Vec<usize>,
    pub t_step: usize,
    pub t_sim: f64,
    pub margin_broken: bool,
}

impl MissionState {
    pub fn new(depot: usize, budget: f64) -> Self {
        Self {
            budget,
            vertex: depot,
            delivered: false,
            path: vec![depot],
            t_step: 0,
            t_sim: 0.0,
            margin_broken: false,
        }
    }
}

/// What the planners know about how the wind can move next.
#[derive(Debug, Clone, PartialEq)]
pub enum RiskModel {
    Markov(MarkovWind),
    Classes(WindClassifier),
}

impl RiskModel {
    pub fn source(&self) -> UncertaintySource<'_> {
        match self {
            RiskModel::Markov(m) => UncertaintySource::Markov(m),
            RiskModel::Classes(c) => UncertaintySource::LogReplay(c),
        }
    }
}

/// Estimated per-edge prices at one decision step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepCosts {
    /// Energy under the estimate, Wh (`+∞` when infeasible).
    pub energy: Vec<f64>,
    pub unc: Vec<f64>,
    /// `energy + λ·unc`.
    pub surrogate: Vec<f64>,
}

/// Everything needed to price edges from a wind estimate.
#[derive(Debug, Clone, Copy)]
pub struct CostModel<'a> {
    pub limits: &'a KinematicLimits,
    pub energy: &'a EnergyParams,
    pub risk: &'a RiskModel,
    pub lambda: f64,
    pub mode: UncertaintyMode,
    pub cap: f64,
}

impl CostModel<'_> {
    pub fn step_costs(&self, g: &TimeGraph, est: &WindVector) -> StepCosts {
        let n = g.edges().len();
        let mut energy = Vec::with_capacity(n);
        let mut unc = Vec::with_capacity(n);
        let mut surrogate = Vec::with_capacity(n);
        for e in g.edges() {
            let en = edge_energy(e.length, &e.direction, est, self.limits, self.energy).energy;
            let u = if self.lambda > 0.0 && en.is_finite() {
                uncertainty(e, est, self.risk.source(), self.mode, self.cap, self.limits, self.energy)
            } else {
                0.0
            };
            energy.push(en);
            unc.push(u);
            surrogate.push(surrogate_cost(en, u, self.lambda));
        }
        StepCosts {
            energy,
            unc,
            surrogate,
        }
    }
}

/// Read-only inputs to one decision.
#[derive(Debug, Clone, Copy)]
pub struct StepView<'a> {
    pub graph: &'a TimeGraph,
    pub state: &'a MissionState,
    pub costs: &'a StepCosts,
    pub returns: &'a ReturnCosts,
    /// Calm-wind energy per edge.
    pub calm: &'a [f64],
    /// Edges whose trajectory collides with an obstacle.
    pub blocked: &'a [bool],
    pub target: usize,
    pub cfg: &'a PlannerConfig,
}

impl StepView<'_> {
    pub fn goal(&self) -> usize {
        if self.state.delivered {
            self.returns.depot()
        } else {
            self.target
        }
    }
}

/// Round trip `depot → target → depot` under a frozen snapshot, as edge ids.
pub fn plan_ser(g: &TimeGraph, c0: &CostSnapshot, depot: usize, target: usize) -> Option<Vec<usize>> {
    let out = shortest_path(g, |e| c0.synthetic(e), depot, target)?;
    let back = shortest_path(g, |e| c0.synthetic(e), target, depot)?;
    Some(out.edges.into_iter().chain(back.edges).collect())
}

pub fn step_rer(view: &StepView<'_>) -> Decision {
    let s = &view.costs.surrogate;
    match shortest_path(view.graph, |e| s[e], view.state.vertex, view.goal()) {
        Some(r) if !r.edges.is_empty() => Decision::Traverse(r.edges[0]),
        _ => Decision::Stuck,
    }
}

pub fn step_ger(view: &StepView<'_>) -> Decision {
    let s = &view.costs.surrogate;
    view.graph
        .out_edges(view.state.vertex)
        .iter()
        .copied()
        .filter(|&e| s[e].is_finite())
        .min_by(|&a, &b| s[a].total_cmp(&s[b]).then(a.cmp(&b)))
        .map_or(Decision::Stuck, Decision::Traverse)
}

/// `B ≥ κ·ret(v)`; always true with the gate ablated.
pub fn return_ok(budget: f64, v: usize, returns: &ReturnCosts, cfg: &PlannerConfig) -> bool {
    if !cfg.ablations.budget_gate {
        return true;
    }
    let ret = returns.cost(v);
    ret.is_finite() && budget >= cfg.kappa_ret * ret
}

pub fn step_ber(view: &StepView<'_>) -> Decision {
    let cfg = view.cfg;
    let g = view.graph;
    let v = view.state.vertex;
    let (cost, unc): (Vec<f64>, Vec<f64>) = if !cfg.ablations.wind_costs {
        (view.calm.to_vec(), vec![0.0; view.calm.len()])
    } else if !cfg.ablations.risk_term {
        (view.costs.energy.clone(), view.costs.unc.clone())
    } else {
        (view.costs.surrogate.clone(), view.costs.unc.clone())
    };
    let usable = |e: usize| cfg.flag == 1 || (cost[e].is_finite() && !view.blocked[e]);
    let (to_go, _) = costs_to(g, |e| if usable(e) { cost[e] } else { f64::INFINITY }, view.goal());
    // predicted energy used to look for a continuation that keeps the gate
    let energy: &[f64] = if cfg.ablations.wind_costs { &view.costs.energy } else { view.calm };
    let budget = view.state.budget;
    let continues = |e: usize| {
        let left = budget - cost[e];
        let reach = constrained_distance(
            g,
            |f| if usable(f) { energy[f] } else { f64::INFINITY },
            g.edge(e).to,
            view.goal(),
            |u, d| return_ok(left - d, u, view.returns, cfg),
        );
        reach.is_finite()
    };

    let mut scored: Vec<(usize, f64)> = g
        .out_edges(v)
        .iter()
        .copied()
        .filter(|&e| usable(e))
        .filter(|&e| return_ok(budget - cost[e], g.edge(e).to, view.returns, cfg))
        .map(|e| (e, cost[e] + to_go[g.edge(e).to]))
        .filter(|&(e, score)| score.is_finite() && continues(e))
        .collect();

    if scored.is_empty() {
        if !view.state.delivered {
            return Decision::Abort;
        }
        return view.returns.next_edge(v).map_or(Decision::Stuck, Decision::Traverse);
    }
    let best = scored.iter().map(|s| s.1).fold(f64::INFINITY, f64::min);
    scored.retain(|&(_, score)| score <= (1.0 + cfg.tau) * best);
    let (e, _) = scored
        .into_iter()
        .min_by(|a, b| unc[a.0].total_cmp(&unc[b.0]).then(a.0.cmp(&b.0)))
        .expect("threshold set contains the minimum");
    Decision::Traverse(e)
}

/// A planner instance for one mission; SER carries its committed route.
#[derive(Debug, Clone, PartialEq)]
pub struct Planner {
    pub cfg: PlannerConfig,
    committed: Vec<usize>,
    cursor: usize,
}

impl Planner {
    pub fn new(cfg: PlannerConfig) -> Self {
        Self {
            cfg,
            committed: Vec::new(),
            cursor: 0,
        }
    }

    pub fn kind(&self) -> PlannerKind {
        self.cfg.planner
    }

    pub fn commit(&mut self, route: Vec<usize>) {
        self.committed = route;
        self.cursor = 0;
    }

    /// Informs the planner that the last decision was flown.
    pub fn advanced(&mut self) {
        self.cursor += 1;
    }

    pub fn decide(&mut self, view: &StepView<'_>) -> Decision {
        match self.cfg.planner {
            PlannerKind::Ser => self
                .committed
                .get(self.cursor)
                .copied()
                .map_or(Decision::Stuck, Decision::Traverse),
            PlannerKind::Rer => step_rer(view),
            PlannerKind::Ger => step_ger(view),
            PlannerKind::Ber => step_ber(view),
        }
    }
}
