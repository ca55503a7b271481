//! Initial-graph fixtures: Erdős–Rényi, barbell, path, cycle and star.

use alloc::vec::Vec;
use rand::Rng;

use crate::graph::{NodeId, TemporalGraph};
use crate::rng::bernoulli;

fn with_nodes(n: usize) -> (TemporalGraph, Vec<NodeId>) {
    let mut g = TemporalGraph::new();
    let ids = (0..n).map(|_| g.add_node()).collect();
    (g, ids)
}

/// `G(n, p)` over ordered pairs when `symmetric` is false, over unordered
/// pairs (each realised as a symmetric pair) otherwise.
pub fn erdos_renyi<R: Rng + ?Sized>(n: usize, p: f64, symmetric: bool, rng: &mut R) -> TemporalGraph {
    let (mut g, ids) = with_nodes(n);
    for (a, &i) in ids.iter().enumerate() {
        for (b, &j) in ids.iter().enumerate() {
            if a == b || (symmetric && b < a) {
                continue;
            }
            if bernoulli(rng, p) {
                g.add_edge(i, j, symmetric).expect("fresh nodes");
            }
        }
    }
    g
}

/// Edge probability giving the requested mean out-degree in `G(n, p)`.
pub fn erdos_renyi_p_for_mean_degree(n: usize, mean_degree: f64) -> f64 {
    if n < 2 {
        0.0
    } else {
        (mean_degree / (n - 1) as f64).clamp(0.0, 1.0)
    }
}

/// Two symmetric `clique`-cliques joined by a symmetric path through
/// `path_len` intermediate nodes (`path_len = 0` joins them with one bridge
/// edge). Nodes `0..clique` form the first clique, the path nodes follow,
/// and the second clique takes the last `clique` ids.
pub fn barbell(clique: usize, path_len: usize) -> TemporalGraph {
    let (mut g, ids) = with_nodes(2 * clique + path_len);
    let second = clique + path_len;
    for base in [0, second] {
        for a in 0..clique {
            for b in a + 1..clique {
                g.add_edge(ids[base + a], ids[base + b], true).expect("fresh nodes");
            }
        }
    }
    if clique > 0 {
        let chain: Vec<NodeId> = core::iter::once(ids[clique - 1])
            .chain(ids[clique..second].iter().copied())
            .chain(core::iter::once(ids[second]))
            .collect();
        for w in chain.windows(2) {
            g.add_edge(w[0], w[1], true).expect("fresh nodes");
        }
    }
    g
}

pub fn path(n: usize, symmetric: bool) -> TemporalGraph {
    let (mut g, ids) = with_nodes(n);
    for w in ids.windows(2) {
        g.add_edge(w[0], w[1], symmetric).expect("fresh nodes");
    }
    g
}

pub fn cycle(n: usize, symmetric: bool) -> TemporalGraph {
    let mut g = path(n, symmetric);
    if n > 2 || (n == 2 && !symmetric) {
        g.add_edge(NodeId(n as u64 - 1), NodeId(0), symmetric).expect("fresh nodes");
    }
    g
}

/// Node 0 is the hub; `leaves` spokes follow.
pub fn star(leaves: usize, symmetric: bool) -> TemporalGraph {
    let (mut g, ids) = with_nodes(leaves + 1);
    for &leaf in &ids[1..] {
        g.add_edge(ids[0], leaf, symmetric).expect("fresh nodes");
    }
    g
}

/// Symmetric complete graph on `n` nodes.
pub fn complete(n: usize) -> TemporalGraph {
    let (mut g, ids) = with_nodes(n);
    for a in 0..n {
        for b in a + 1..n {
            g.add_edge(ids[a], ids[b], true).expect("fresh nodes");
        }
    }
    g
}
