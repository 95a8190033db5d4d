use serde::{Deserialize, Serialize};

use super::{costs_to, Edge, TimeGraph};
use crate::energy::{edge_energy, EnergyParams};
use crate::wind::{sector_index, KinematicLimits, MarkovWind, WindClassifier, WindVector};

/// Lower bound on the synthetic distance as a fraction of the edge length.
pub const COST_FLOOR_FRACTION: f64 = 0.05;

/// Wind-sensitive synthetic distance in metres; `+∞` when the wind makes
/// the edge unflyable.
pub fn edge_cost(
    edge: &Edge,
    wind: &WindVector,
    lambda: f64,
    limits: &KinematicLimits,
    params: &EnergyParams,
) -> f64 {
    debug_assert!(lambda >= 0.0);
    let windy = edge_energy(edge.length, &edge.direction, wind, limits, params);
    if !windy.is_feasible() {
        return f64::INFINITY;
    }
    if lambda == 0.0 {
        return edge.length;
    }
    let calm = edge_energy(edge.length, &edge.direction, &WindVector::calm(), limits, params);
    if !calm.is_feasible() || calm.energy <= 0.0 {
        return edge.length;
    }
    let l_wind = edge.length * (windy.energy - calm.energy) / calm.energy;
    (edge.length + lambda * l_wind).max(COST_FLOOR_FRACTION * edge.length)
}

/// Per-edge entry of a [`CostSnapshot`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeCost {
    /// Synthetic distance, m.
    pub synthetic: f64,
    /// Traversal energy, Wh.
    pub energy: f64,
    pub feasible: bool,
}

/// Edge costs frozen at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct CostSnapshot {
    pub t: f64,
    pub edges: Vec<EdgeCost>,
}

impl CostSnapshot {
    /// Prices every edge under the wind `wind_for(edge)`.
    pub fn build<F: Fn(&Edge) -> WindVector>(
        g: &TimeGraph,
        t: f64,
        wind_for: F,
        lambda: f64,
        limits: &KinematicLimits,
        params: &EnergyParams,
    ) -> Self {
        let edges = g
            .edges()
            .iter()
            .map(|e| {
                let w = wind_for(e);
                let tr = edge_energy(e.length, &e.direction, &w, limits, params);
                EdgeCost {
                    synthetic: edge_cost(e, &w, lambda, limits, params),
                    energy: tr.energy,
                    feasible: tr.is_feasible(),
                }
            })
            .collect();
        Self { t, edges }
    }

    pub fn synthetic(&self, e: usize) -> f64 {
        self.edges[e].synthetic
    }
}

/// How the one-step-reachable wind classes are enumerated.
#[derive(Debug, Clone, Copy)]
pub enum UncertaintySource<'a> {
    /// Classes with a positive transition probability from the current one.
    Markov(&'a MarkovWind),
    /// Angular neighbours at the same magnitude and one magnitude step up.
    LogReplay(&'a WindClassifier),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UncertaintyMode {
    #[default]
    WorstCase,
    Expected,
}

/// Upside energy deviation (Wh) if the wind moves one class away from the
/// estimate. Unflyable deviations count as `cap`.
#[allow(clippy::too_many_arguments)]
pub fn uncertainty(
    edge: &Edge,
    est: &WindVector,
    source: UncertaintySource<'_>,
    mode: UncertaintyMode,
    cap: f64,
    limits: &KinematicLimits,
    params: &EnergyParams,
) -> f64 {
    let base = edge_energy(edge.length, &edge.direction, est, limits, params);
    if !base.is_feasible() {
        return 0.0;
    }
    let deviation = |w: &WindVector| {
        let tr = edge_energy(edge.length, &edge.direction, w, limits, params);
        if tr.is_feasible() {
            (tr.energy - base.energy).max(0.0)
        } else {
            cap
        }
    };
    let weighted: Vec<(f64, f64)> = match source {
        UncertaintySource::Markov(m) => {
            let current = sector_index(est.direction, m.k());
            m.row(current)
                .iter()
                .enumerate()
                .filter(|&(j, &p)| j != current && p > 0.0)
                .map(|(j, &p)| (p, deviation(&m.class_wind(j))))
                .collect()
        }
        UncertaintySource::LogReplay(c) => {
            let neighbours = c.neighbors(&c.classify(est));
            let p = 1.0 / neighbours.len() as f64;
            neighbours
                .iter()
                .map(|n| (p, deviation(&c.representative(n))))
                .collect()
        }
    };
    match mode {
        UncertaintyMode::WorstCase => weighted.iter().map(|x| x.1).fold(0.0, f64::max),
        UncertaintyMode::Expected => weighted.iter().map(|x| x.0 * x.1).sum(),
    }
}

/// Risk-aware surrogate cost `E + λ·Unc` in Wh.
pub fn surrogate_cost(energy: f64, unc: f64, lambda: f64) -> f64 {
    if !energy.is_finite() {
        return f64::INFINITY;
    }
    energy + lambda * unc
}

/// Worst-case energy to fly home from every vertex, pricing each edge under
/// a headwind of `worst_wind` straight against it.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnCosts {
    depot: usize,
    worst_wind: f64,
    prices: Vec<f64>,
    cost: Vec<f64>,
    next: Vec<Option<usize>>,
}

impl ReturnCosts {
    pub fn new(
        g: &TimeGraph,
        depot: usize,
        worst_wind: f64,
        limits: &KinematicLimits,
        params: &EnergyParams,
    ) -> Self {
        let prices: Vec<f64> = g
            .edges()
            .iter()
            .map(|e| worst_case_price(e, worst_wind, limits, params))
            .collect();
        let (cost, next) = costs_to(g, |e| prices[e], depot);
        Self {
            depot,
            worst_wind,
            prices,
            cost,
            next,
        }
    }

    pub fn depot(&self) -> usize {
        self.depot
    }

    pub fn worst_wind(&self) -> f64 {
        self.worst_wind
    }

    /// Wh; `+∞` when the depot is unreachable.
    pub fn cost(&self, v: usize) -> f64 {
        self.cost[v]
    }

    pub fn price(&self, e: usize) -> f64 {
        self.prices[e]
    }

    pub fn next_edge(&self, v: usize) -> Option<usize> {
        self.next[v]
    }

    /// Edge ids of the conservative route home; empty at the depot or when
    /// unreachable.
    pub fn return_path(&self, g: &TimeGraph, mut v: usize) -> Vec<usize> {
        let mut out = Vec::new();
        while let Some(e) = self.next[v] {
            out.push(e);
            v = g.edge(e).to;
        }
        out
    }
}

fn worst_case_price(e: &Edge, worst_wind: f64, limits: &KinematicLimits, params: &EnergyParams) -> f64 {
    let head = WindVector::new(worst_wind, e.heading() + std::f64::consts::PI);
    let tr = edge_energy(e.length, &e.direction, &head, limits, params);
    tr.energy
}
