//! Builds the intensional graph of an ontology and prints its arcs and DOT.
//!
//! `cargo run --example intensional_graph [file.ttl]`

use std::path::PathBuf;

use ontocc::graph::{build_intensional_graph, derive_arcs};
use ontocc::store::load_ontology;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/testdata/toy1.ttl").into());
    let doc = load_ontology(&path, "example")?;
    println!("{} triples", doc.len());
    for arc in derive_arcs(&doc) {
        println!("arc {} --{}--> {}", arc.source, arc.property, arc.target);
    }
    let graph = build_intensional_graph(&doc);
    graph.validate()?;
    println!("{} nodes, {} edges\n", graph.node_count(), graph.edge_count());
    print!("{}", graph.to_dot());
    Ok(())
}
