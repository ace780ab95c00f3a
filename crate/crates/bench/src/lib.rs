//! Shared fixtures for the pipeline benchmarks.

use edgeroles::featlearn::{base_features, learn_features, EntityKind, FeatureSet, LearnConfig};
use edgeroles::gen;
use edgeroles::Graph;

/// A sparse random graph with five edges per node.
pub fn sparse_graph(m: usize, seed: u64) -> Graph {
    gen::gnm((m / 5).max(2), m, seed)
}

/// Edge feature definitions learned on a 20k-edge training graph.
pub fn edge_definitions() -> FeatureSet {
    let g = sparse_graph(20_000, 7);
    let x0 = base_features(&g, EntityKind::Edge).expect("base features");
    learn_features(&g, &x0, &LearnConfig::default())
        .expect("feature learning")
        .definitions()
}
