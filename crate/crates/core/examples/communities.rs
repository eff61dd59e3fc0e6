//! Partitions an intensional graph by greedy modularity, then refines
//! sparse communities by density.
//!
//! `cargo run --example communities [file.ttl]`

use std::path::PathBuf;

use ontocc::community::{cnm_partition, refine};
use ontocc::graph::build_intensional_graph;
use ontocc::store::load_ontology;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| {
        concat!(env!("CARGO_MANIFEST_DIR"), "/testdata/minicorpus/festivals.ttl").into()
    });
    let graph = build_intensional_graph(&load_ontology(&path, "example")?);
    let partition = cnm_partition(&graph)?;
    println!(
        "greedy partition: {} communities, Q = {:.4}",
        partition.community_count(),
        partition.modularity
    );
    for community in refine(&graph, &partition) {
        let names: Vec<String> = community.nodes.iter().map(|n| n.display_name()).collect();
        println!(
            "{}: {} nodes, {} internal edges, density {:.3}\n    {}",
            community.id,
            community.len(),
            community.internal_edges,
            community.density,
            names.join(", ")
        );
    }
    Ok(())
}
