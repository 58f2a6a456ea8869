//! Shared helpers for unit tests.

use rand::Rng as _;

use crate::graph::ConflictGraph;
use crate::rng::rng_from_seed;

/// Directed Erdős–Rényi graph: each ordered pair independently with prob `p`.
pub fn random_digraph(n: usize, p: f64, seed: u64) -> ConflictGraph {
    let mut rng = rng_from_seed(seed);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in 0..n {
            if u != v && rng.gen_bool(p) {
                edges.push((u, v));
            }
        }
    }
    ConflictGraph::from_edges(n, edges).unwrap()
}

/// Smallest k admitting a proper coloring, by trying all k^n assignments.
pub fn brute_force_chromatic(g: &ConflictGraph) -> u32 {
    let n = g.num_nodes();
    if n == 0 {
        return 0;
    }
    let edges = g.undirected_edges();
    for k in 1..=n {
        let mut col = vec![0usize; n];
        loop {
            if edges.iter().all(|&(u, v)| col[u] != col[v]) {
                return k as u32;
            }
            let mut i = 0;
            while i < n {
                col[i] += 1;
                if col[i] < k {
                    break;
                }
                col[i] = 0;
                i += 1;
            }
            if i == n {
                break;
            }
        }
    }
    n as u32
}
