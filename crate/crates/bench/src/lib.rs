//! Shared fixtures for the benchmarks.

use lcg_core::{generate_dataset, label_dataset, ConflictGraph, DatasetRecord, Family, GenSpec};

/// Labeled ER conflict graphs of `n x n` pairs with link probability `p`.
pub fn er_dataset(n: usize, p: f64, count: usize, seed: u64) -> Vec<DatasetRecord> {
    let mut ds = generate_dataset(&GenSpec::new(Family::Er, n, n, seed).param("p", p), count).expect("valid spec");
    label_dataset(&mut ds, 10_000_000);
    ds
}

/// The first graph of an ER draw with the given chromatic number.
pub fn er_graph_with_chi(n: usize, chi: u32, seed: u64) -> ConflictGraph {
    er_dataset(n, 0.2, 200, seed)
        .into_iter()
        .find(|r| r.chi == Some(chi))
        .map(|r| r.graph)
        .expect("ensemble contains the requested chromatic number")
}
