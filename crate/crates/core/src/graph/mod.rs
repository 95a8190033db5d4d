//! Directed waypoint graph with wind-dependent edge costs.

mod cost;
mod er;
mod path;

pub use cost::{
    edge_cost, surrogate_cost, uncertainty, CostSnapshot, EdgeCost, ReturnCosts, UncertaintyMode,
    UncertaintySource, COST_FLOOR_FRACTION,
};
pub use er::{generate_er, ErArea};
pub use path::{constrained_distance, costs_to, shortest_path, Route};

use std::collections::VecDeque;
use std::path::Path;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{config, io_err, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum VertexKind {
    Depot,
    Waypoint,
    Customer,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Vertex {
    pub id: usize,
    pub position: Vector3<f64>,
    pub kind: VertexKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub id: usize,
    pub from: usize,
    pub to: usize,
    pub length: f64,
    pub direction: Vector3<f64>,
}

impl Edge {
    /// Heading of the horizontal projection, radians.
    pub fn heading(&self) -> f64 {
        crate::wind::normalize_angle(self.direction.y.atan2(self.direction.x))
    }
}

/// Graph topology and geometry. Vertex ids equal their index and edge ids
/// equal theirs; lengths and directions are always derived from positions.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGraph {
    vertices: Vec<Vertex>,
    edges: Vec<Edge>,
    out_edges: Vec<Vec<usize>>,
    in_edges: Vec<Vec<usize>>,
    depot: usize,
}

impl TimeGraph {
    /// Builds a graph from vertices (ids `0..n` in any order) and `(from, to)`
    /// pairs; edge ids follow the order of `arcs`.
    pub fn new(mut vertices: Vec<Vertex>, arcs: &[(usize, usize)]) -> Result<Self> {
        vertices.sort_by_key(|v| v.id);
        for (i, v) in vertices.iter().enumerate() {
            if v.id != i {
                return config(format!("vertex ids must be unique and contiguous from 0, found {}", v.id));
            }
            if !v.position.iter().all(|c| c.is_finite()) {
                return config(format!("vertex {i} has a non-finite position"));
            }
        }
        let depots: Vec<usize> = vertices
            .iter()
            .filter(|v| v.kind == VertexKind::Depot)
            .map(|v| v.id)
            .collect();
        if depots.len() != 1 {
            return config(format!("graph needs exactly one depot, found {}", depots.len()));
        }
        let n = vertices.len();
        let mut edges = Vec::with_capacity(arcs.len());
        let mut out_edges = vec![Vec::new(); n];
        let mut in_edges = vec![Vec::new(); n];
        for (id, &(from, to)) in arcs.iter().enumerate() {
            if from >= n || to >= n {
                return config(format!("edge {id} references a missing vertex"));
            }
            let delta = vertices[to].position - vertices[from].position;
            let length = delta.norm();
            if !(length > 0.0) {
                return config(format!("edge {id} has zero length"));
            }
            edges.push(Edge {
                id,
                from,
                to,
                length,
                direction: delta / length,
            });
            out_edges[from].push(id);
            in_edges[to].push(id);
        }
        Ok(Self {
            vertices,
            edges,
            out_edges,
            in_edges,
            depot: depots[0],
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn vertex(&self, id: usize) -> &Vertex {
        &self.vertices[id]
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, id: usize) -> &Edge {
        &self.edges[id]
    }

    pub fn out_edges(&self, v: usize) -> &[usize] {
        &self.out_edges[v]
    }

    pub fn in_edges(&self, v: usize) -> &[usize] {
        &self.in_edges[v]
    }

    pub fn depot(&self) -> usize {
        self.depot
    }

    pub fn find_edge(&self, from: usize, to: usize) -> Option<usize> {
        self.out_edges[from]
            .iter()
            .copied()
            .find(|&e| self.edges[e].to == to)
    }

    /// Vertices that can reach `target` along directed edges.
    pub fn reaching(&self, target: usize) -> Vec<bool> {
        let mut seen = vec![false; self.vertex_count()];
        seen[target] = true;
        let mut queue = VecDeque::from([target]);
        while let Some(v) = queue.pop_front() {
            for &e in &self.in_edges[v] {
                let u = self.edges[e].from;
                if !seen[u] {
                    seen[u] = true;
                    queue.push_back(u);
                }
            }
        }
        seen
    }

    /// Vertex nearest to `p` in the horizontal plane, ties by id.
    pub fn nearest_vertex(&self, x: f64, y: f64) -> usize {
        let mut best = (f64::INFINITY, 0);
        for v in &self.vertices {
            let d = (v.position.x - x).hypot(v.position.y - y);
            if d < best.0 {
                best = (d, v.id);
            }
        }
        best.1
    }

    pub fn to_file(&self) -> GraphFile {
        GraphFile {
            vertices: self
                .vertices
                .iter()
                .map(|v| (v.id, v.position.x, v.position.y, v.position.z, v.kind))
                .collect(),
            edges: self.edges.iter().map(|e| (e.id, e.from, e.to)).collect(),
        }
    }

    pub fn from_file(file: &GraphFile) -> Result<Self> {
        let vertices = file
            .vertices
            .iter()
            .map(|&(id, x, y, z, kind)| Vertex {
                id,
                position: Vector3::new(x, y, z),
                kind,
            })
            .collect();
        let mut records = file.edges.clone();
        records.sort_by_key(|r| r.0);
        for (i, r) in records.iter().enumerate() {
            if r.0 != i {
                return config(format!("edge ids must be unique and contiguous from 0, found {}", r.0));
            }
        }
        let arcs: Vec<(usize, usize)> = records.iter().map(|r| (r.1, r.2)).collect();
        Self::new(vertices, &arcs)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(&self.to_file())?;
        std::fs::write(path, text + "\n").map_err(io_err(path))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        let file: GraphFile = serde_json::from_str(&text)?;
        Self::from_file(&file)
    }
}

/// On-disk graph: `vertices: [id, x, y, z, kind]`, `edges: [id, from, to]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphFile {
    pub vertices: Vec<(usize, f64, f64, f64, VertexKind)>,
    pub edges: Vec<(usize, usize, usize)>,
}

#[cfg(test)]
pub(crate) mod test_graphs {
    use super::*;

    pub fn vertex(id: usize, x: f64, y: f64) -> Vertex {
        Vertex {
            id,
            position: Vector3::new(x, y, 0.0),
            kind: if id == 0 {
                VertexKind::Depot
            } else {
                VertexKind::Waypoint
            },
        }
    }

    /// A(0)->B(1), A->C(2), B->D(3), C->D; plus reverse arcs.
    pub fn diamond() -> TimeGraph {
        let vs = vec![
            vertex(0, 0.0, 0.0),
            vertex(1, 100.0, 100.0),
            vertex(2, 100.0, -100.0),
            vertex(3, 200.0, 0.0),
        ];
        TimeGraph::new(
            vs,
            &[(0, 1), (0, 2), (1, 3), (2, 3), (1, 0), (2, 0), (3, 1), (3, 2)],
        )
        .unwrap()
    }
}
