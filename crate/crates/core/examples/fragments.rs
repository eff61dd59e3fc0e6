//! Extracts one ontology fragment per community and prints it as Turtle.
//!
//! `cargo run --example fragments [file.ttl]`

use std::path::PathBuf;

use ontocc::community::detect_communities;
use ontocc::fragments::extract_fragment;
use ontocc::graph::build_intensional_graph;
use ontocc::store::load_ontology;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| {
        concat!(env!("CARGO_MANIFEST_DIR"), "/testdata/minicorpus/event_participation.ttl").into()
    });
    let doc = load_ontology(&path, "example")?;
    for community in detect_communities(&build_intensional_graph(&doc)) {
        let fragment = extract_fragment(&community, &doc)?;
        println!("# {} ({} of {} triples)", community.id, fragment.triples.len(), doc.len());
        println!("{}", fragment.to_turtle());
    }
    Ok(())
}
