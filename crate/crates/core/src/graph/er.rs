use std::collections::HashSet;

use nalgebra::Vector3;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{TimeGraph, Vertex, VertexKind};
use crate::error::{config, Result};

/// Sampling box for vertex positions, metres.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ErArea {
    pub x_max: f64,
    pub y_max: f64,
    #[serde(default)]
    pub z_min: f64,
    #[serde(default)]
    pub z_max: f64,
}

impl Default for ErArea {
    fn default() -> Self {
        Self {
            x_max: 1000.0,
            y_max: 1000.0,
            z_min: 0.0,
            z_max: 0.0,
        }
    }
}

/// Erdős–Rényi digraph over uniformly placed vertices, augmented with a
/// random bidirectional spanning tree so every vertex reaches every other.
/// Vertex 0 is the depot.
pub fn generate_er(n: usize, p: f64, area: ErArea, seed: u64) -> Result<TimeGraph> {
    if n < 2 {
        return config("an ER graph needs at least two vertices");
    }
    if !(p > 0.0 && p <= 1.0) {
        return config("edge probability must lie in (0, 1]");
    }
    if !(area.x_max > 0.0 && area.y_max > 0.0 && area.z_max >= area.z_min) {
        return config("invalid sampling area");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vertices: Vec<Vertex> = (0..n)
        .map(|id| {
            let x = rng.gen::<f64>() * area.x_max;
            let y = rng.gen::<f64>() * area.y_max;
            let z = area.z_min + rng.gen::<f64>() * (area.z_max - area.z_min);
            Vertex {
                id,
                position: Vector3::new(x, y, z),
                kind: if id == 0 {
                    VertexKind::Depot
                } else {
                    VertexKind::Waypoint
                },
            }
        })
        .collect();

    let mut arcs = Vec::new();
    let mut present = HashSet::new();
    for from in 0..n {
        for to in 0..n {
            if from != to && rng.gen::<f64>() < p {
                arcs.push((from, to));
                present.insert((from, to));
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    for i in 1..n {
        let a = order[i];
        let b = order[rng.gen_range(0..i)];
        for arc in [(a, b), (b, a)] {
            if present.insert(arc) {
                arcs.push(arc);
            }
        }
    }
    TimeGraph::new(vertices, &arcs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complete_pair() {
        let g = generate_er(2, 1.0, ErArea::default(), 1).unwrap();
        assert_eq!(g.edges().len(), 2);
        assert!(g.find_edge(0, 1).is_some() && g.find_edge(1, 0).is_some());
    }

    #[test]
    fn seed_sensitivity_and_determinism() {
        let a = generate_er(60, 0.08, ErArea::default(), 1).unwrap();
        let b = generate_er(60, 0.08, ErArea::default(), 2).unwrap();
        let a2 = generate_er(60, 0.08, ErArea::default(), 1).unwrap();
        assert_eq!(a, a2);
        let pairs = |g: &TimeGraph| g.edges().iter().map(|e| (e.from, e.to)).collect::<HashSet<_>>();
        assert_ne!(pairs(&a), pairs(&b));
    }

    #[test]
    fn every_vertex_reaches_depot() {
        for seed in 0..50 {
            let g = generate_er(30, 0.02, ErArea::default(), seed).unwrap();
            assert!(g.reaching(g.depot()).iter().all(|&r| r), "seed {seed}");
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(generate_er(1, 0.5, ErArea::default(), 0).is_err());
        assert!(generate_er(5, 0.0, ErArea::default(), 0).is_err());
        assert!(generate_er(5, 1.5, ErArea::default(), 0).is_err());
    }
}
