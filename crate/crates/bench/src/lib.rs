//! Shared fixtures for the criterion benches.

use seedsim_core::{generate_synthetic, Graph, SyntheticModel};

/// Scale-free benchmark topology, mirrored into a directed graph the way the
/// experiment harness does for directed grids.
pub fn directed_ba(nodes: u32, m: u32, seed: u64) -> Graph {
    let und = generate_synthetic(SyntheticModel::BarabasiAlbert { nodes, m }, seed)
        .expect("valid generator parameters");
    let mirrored: Vec<(u64, u64)> = und
        .edges()
        .iter()
        .flat_map(|&(a, b)| {
            [
                (und.label_of(a), und.label_of(b)),
                (und.label_of(b), und.label_of(a)),
            ]
        })
        .collect();
    Graph::from_labeled_edges(true, &mirrored).expect("mirroring preserves validity")
}
