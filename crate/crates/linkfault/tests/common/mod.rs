//! Shared fixtures and independent oracles for the integration tests.
//!
//! The oracles deliberately avoid the library's own algorithms: hop
//! distances come from a textbook Dijkstra over an adjacency it builds
//! itself, bridges from a recursive low-link DFS, and metric values from
//! direct loops over (true, predicted) pairs.

#![allow(dead_code)] // each test binary uses a different subset

use linkfault::topology::{Link, LinkRef, Topology};

/// Builds a topology from `(u, v)` pairs with uniform capacity/length.
pub fn topo_from_pairs(node_count: usize, pairs: &[(usize, usize)]) -> Topology {
    let links = pairs
        .iter()
        .map(|&(u, v)| Link { ends: LinkRef::new(u, v), capacity_mbps: 1000.0, length_m: 50.0 })
        .collect();
    Topology::new(node_count, links).expect("fixture topology must validate")
}

/// Triangle: every link removable.
pub fn triangle() -> Topology {
    topo_from_pairs(3, &[(0, 1), (0, 2), (1, 2)])
}

/// Path 0-1-2: every link a bridge.
pub fn path3() -> Topology {
    topo_from_pairs(3, &[(0, 1), (1, 2)])
}

/// Ten-node fixture with cycles and varied degrees; all 13 links lie on
/// cycles, so every single-link removal keeps it connected.
pub fn desk_pairs() -> Vec<(usize, usize)> {
    vec![
        (0, 2),
        (0, 7),
        (1, 2),
        (1, 8),
        (2, 3),
        (3, 4),
        (3, 5),
        (4, 5),
        (5, 6),
        (5, 9),
        (6, 7),
        (7, 8),
        (8, 9),
    ]
}

pub fn desk() -> Topology {
    topo_from_pairs(10, &desk_pairs())
}

/// Dijkstra with unit edge weights: hop distance from `source` to every
/// node, `usize::MAX` when unreachable. Independent of the library's BFS.
pub fn dijkstra_hops(topology: &Topology, source: usize) -> Vec<usize> {
    use std::cmp::Reverse;
    use std::collections::BinaryHeap;

    let v = topology.node_count();
    let mut adjacency = vec![Vec::new(); v];
    for link in topology.links() {
        adjacency[link.ends.a].push(link.ends.b);
        adjacency[link.ends.b].push(link.ends.a);
    }

    let mut dist = vec![usize::MAX; v];
    dist[source] = 0;
    let mut heap = BinaryHeap::new();
    heap.push(Reverse((0usize, source)));
    while let Some(Reverse((d, node))) = heap.pop() {
        if d > dist[node] {
            continue;
        }
        for &next in &adjacency[node] {
            if d + 1 < dist[next] {
                dist[next] = d + 1;
                heap.push(Reverse((d + 1, next)));
            }
        }
    }
    dist
}

/// Bridge edges by low-link DFS: links whose removal disconnects the graph.
pub fn bridges(topology: &Topology) -> Vec<LinkRef> {
    let v = topology.node_count();
    let mut adjacency: Vec<Vec<(usize, usize)>> = vec![Vec::new(); v];
    for (idx, link) in topology.links().iter().enumerate() {
        adjacency[link.ends.a].push((link.ends.b, idx));
        adjacency[link.ends.b].push((link.ends.a, idx));
    }

    struct State<'a> {
        adjacency: &'a [Vec<(usize, usize)>],
        visit: Vec<Option<usize>>,
        low: Vec<usize>,
        clock: usize,
        found: Vec<usize>,
    }
    fn dfs(state: &mut State<'_>, node: usize, parent_edge: Option<usize>) {
        state.visit[node] = Some(state.clock);
        state.low[node] = state.clock;
        state.clock += 1;
        for &(next, edge) in &state.adjacency[node].to_vec() {
            if Some(edge) == parent_edge {
                continue;
            }
            match state.visit[next] {
                Some(t) => state.low[node] = state.low[node].min(t),
                None => {
                    dfs(state, next, Some(edge));
                    state.low[node] = state.low[node].min(state.low[next]);
                    if state.low[next] > state.visit[node].expect("visited") {
                        state.found.push(edge);
                    }
                }
            }
        }
    }

    let mut state =
        State { adjacency: &adjacency, visit: vec![None; v], low: vec![0; v], clock: 0, found: Vec::new() };
    for start in 0..v {
        if state.visit[start].is_none() {
            dfs(&mut state, start, None);
        }
    }
    let mut ends: Vec<LinkRef> = state.found.iter().map(|&i| topology.links()[i].ends).collect();
    ends.sort();
    ends
}

/// Per-class (tp, fp, fn) accumulated directly from pairs, bypassing the
/// confusion-matrix type.
pub fn brute_counts(truth: &[usize], predicted: &[usize], k: usize) -> Vec<(u64, u64, u64)> {
    let mut counts = vec![(0u64, 0u64, 0u64); k];
    for (&t, &p) in truth.iter().zip(predicted) {
        if t == p {
            counts[t].0 += 1;
        } else {
            counts[p].1 += 1;
            counts[t].2 += 1;
        }
    }
    counts
}

/// Macro F1 computed with its own loops, for two-path consistency checks.
pub fn brute_macro_f1(truth: &[usize], predicted: &[usize], k: usize) -> f64 {
    let counts = brute_counts(truth, predicted, k);
    let f1_sum: f64 = counts
        .iter()
        .map(|&(tp, fp, fn_)| {
            let p = if tp + fp > 0 { tp as f64 / (tp + fp) as f64 } else { 0.0 };
            let r = if tp + fn_ > 0 { tp as f64 / (tp + fn_) as f64 } else { 0.0 };
            if p + r > 0.0 {
                2.0 * p * r / (p + r)
            } else {
                0.0
            }
        })
        .sum();
    f1_sum / k as f64
}
