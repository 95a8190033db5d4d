use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};

use super::TimeGraph;

#[derive(Debug, Clone, PartialEq)]
pub struct Route {
    pub vertices: Vec<usize>,
    pub edges: Vec<usize>,
    pub total: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct HeapItem {
    dist: f64,
    vertex: usize,
}

impl Eq for HeapItem {}

// BinaryHeap is a max heap; invert so the smallest distance pops first.
impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.vertex.cmp(&self.vertex))
    }
}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn usable(c: f64) -> bool {
    c.is_finite() && c >= 0.0
}

fn dijkstra_from<F: Fn(usize) -> f64>(g: &TimeGraph, cost: &F, src: usize) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; g.vertex_count()];
    dist[src] = 0.0;
    let mut heap = BinaryHeap::from([HeapItem {
        dist: 0.0,
        vertex: src,
    }]);
    while let Some(HeapItem { dist: d, vertex: v }) = heap.pop() {
        if d > dist[v] {
            continue;
        }
        for &e in g.out_edges(v) {
            let c = cost(e);
            if !usable(c) {
                continue;
            }
            let to = g.edge(e).to;
            let nd = d + c;
            if nd < dist[to] {
                dist[to] = nd;
                heap.push(HeapItem { dist: nd, vertex: to });
            }
        }
    }
    dist
}

/// Minimum-cost route from `src` to `dst`.
///
/// Edges with infinite, NaN or negative cost are treated as absent. Among
/// routes of equal total the lexicographically smallest vertex sequence
/// wins, then the cheapest and lowest-id parallel edge.
pub fn shortest_path<F: Fn(usize) -> f64>(
    g: &TimeGraph,
    cost: F,
    src: usize,
    dst: usize,
) -> Option<Route> {
    if src == dst {
        return Some(Route {
            vertices: vec![src],
            edges: Vec::new(),
            total: 0.0,
        });
    }
    let dist = dijkstra_from(g, &cost, src);
    if !dist[dst].is_finite() {
        return None;
    }
    let tight = |e: usize| {
        let edge = g.edge(e);
        let c = cost(e);
        usable(c) && dist[edge.from].is_finite() && dist[edge.from] + c == dist[edge.to]
    };
    // vertices from which dst is reachable along tight edges
    let mut to_dst = vec![false; g.vertex_count()];
    to_dst[dst] = true;
    let mut queue = VecDeque::from([dst]);
    while let Some(v) = queue.pop_front() {
        for &e in g.in_edges(v) {
            let u = g.edge(e).from;
            if !to_dst[u] && tight(e) {
                to_dst[u] = true;
                queue.push_back(u);
            }
        }
    }

    let mut vertices = vec![src];
    let mut edges = Vec::new();
    let mut on_path = vec![false; g.vertex_count()];
    on_path[src] = true;
    let mut v = src;
    while v != dst {
        let next = g
            .out_edges(v)
            .iter()
            .copied()
            .filter(|&e| tight(e) && to_dst[g.edge(e).to] && !on_path[g.edge(e).to])
            .min_by(|&a, &b| {
                g.edge(a)
                    .to
                    .cmp(&g.edge(b).to)
                    .then_with(|| cost(a).total_cmp(&cost(b)))
                    .then_with(|| a.cmp(&b))
            });
        // only zero-cost cycles can strand the greedy walk
        let e = next?;
        v = g.edge(e).to;
        on_path[v] = true;
        vertices.push(v);
        edges.push(e);
    }
    Some(Route {
        vertices,
        edges,
        total: dist[dst],
    })
}

/// Cost-to-go from every vertex to `target` and the first edge of a
/// cheapest continuation (`None` at the target and where unreachable).
pub fn costs_to<F: Fn(usize) -> f64>(
    g: &TimeGraph,
    cost: F,
    target: usize,
) -> (Vec<f64>, Vec<Option<usize>>) {
    let n = g.vertex_count();
    let mut dist = vec![f64::INFINITY; n];
    dist[target] = 0.0;
    let mut heap = BinaryHeap::from([HeapItem {
        dist: 0.0,
        vertex: target,
    }]);
    while let Some(HeapItem { dist: d, vertex: v }) = heap.pop() {
        if d > dist[v] {
            continue;
        }
        for &e in g.in_edges(v) {
            let c = cost(e);
            if !usable(c) {
                continue;
            }
            let from = g.edge(e).from;
            let nd = c + d;
            if nd < dist[from] {
                dist[from] = nd;
                heap.push(HeapItem {
                    dist: nd,
                    vertex: from,
                });
            }
        }
    }
    let next = (0..n)
        .map(|u| {
            if u == target || !dist[u].is_finite() {
                return None;
            }
            g.out_edges(u)
                .iter()
                .copied()
                .filter(|&e| {
                    let c = cost(e);
                    usable(c) && c + dist[g.edge(e).to] == dist[u]
                })
                .min_by_key(|&e| (g.edge(e).to, e))
        })
        .collect();
    (dist, next)
}

/// Cheapest `src → dst` cost over paths whose every vertex after `src`
/// passes `admit(vertex, cost so far)`. `admit` must be monotone: if it
/// accepts a cost it accepts every smaller one, which keeps the search
/// exact. Infinite when no such path exists.
pub fn constrained_distance<F, A>(g: &TimeGraph, cost: F, src: usize, dst: usize, admit: A) -> f64
where
    F: Fn(usize) -> f64,
    A: Fn(usize, f64) -> bool,
{
    let mut dist = vec![f64::INFINITY; g.vertex_count()];
    dist[src] = 0.0;
    let mut heap = BinaryHeap::from([HeapItem {
        dist: 0.0,
        vertex: src,
    }]);
    while let Some(HeapItem { dist: d, vertex: v }) = heap.pop() {
        if v == dst {
            return d;
        }
        if d > dist[v] {
            continue;
        }
        for &e in g.out_edges(v) {
            let c = cost(e);
            if !usable(c) {
                continue;
            }
            let to = g.edge(e).to;
            let nd = d + c;
            if nd < dist[to] && admit(to, nd) {
                dist[to] = nd;
                heap.push(HeapItem { dist: nd, vertex: to });
            }
        }
    }
    f64::INFINITY
}

#[cfg(test)]
mod tests {
    use super::super::test_graphs::*;
    use super::*;

    #[test]
    fn diamond_prefers_cheaper_branch() {
        let g = diamond();
        // A->B 1, A->C 4, B->D 1, C->D 1
        let costs = [1.0, 4.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0];
        let r = shortest_path(&g, |e| costs[e], 0, 3).unwrap();
        assert_eq!(r.vertices, vec![0, 1, 3]);
        assert_eq!(r.total, 2.0);
    }

    #[test]
    fn tie_break_is_lexicographic() {
        let g = diamond();
        let r = shortest_path(&g, |_| 1.0, 0, 3).unwrap();
        assert_eq!(r.vertices, vec![0, 1, 3]);
        let costs = [1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0];
        let r = shortest_path(&g, |e| costs[e], 3, 0).unwrap();
        assert_eq!(r.vertices, vec![3, 1, 0]);
    }

    #[test]
    fn same_vertex_is_empty_route() {
        let r = shortest_path(&diamond(), |_| 1.0, 2, 2).unwrap();
        assert!(r.edges.is_empty());
        assert_eq!(r.total, 0.0);
    }

    #[test]
    fn infeasible_edges_make_unreachable() {
        let g = diamond();
        let r = shortest_path(&g, |e| if g.edge(e).to == 3 { f64::INFINITY } else { 1.0 }, 0, 3);
        assert!(r.is_none());
    }

    #[test]
    fn costs_to_matches_forward_search() {
        let g = diamond();
        let costs = [1.0, 4.0, 1.0, 1.0, 2.0, 0.5, 3.0, 1.0];
        let (dist, next) = costs_to(&g, |e| costs[e], 0);
        for v in 0..4 {
            let r = shortest_path(&g, |e| costs[e], v, 0).unwrap();
            assert!((r.total - dist[v]).abs() < 1e-12);
        }
        assert_eq!(next[0], None);
        assert_eq!(next[3].map(|e| g.edge(e).to), Some(2));
    }
}
