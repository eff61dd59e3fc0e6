//! Builds a virtual document per community and grounds it in synsets and
//! frames, comparing first-sense and graph-based disambiguation.
//!
//! `cargo run --example grounding [file.ttl]`

use std::path::{Path, PathBuf};

use ontocc::community::detect_communities;
use ontocc::graph::build_intensional_graph;
use ontocc::grounding::{ground, FrameMap, Lexicon, WsdStrategy};
use ontocc::store::load_ontology;
use ontocc::virtualdoc::build_virtual_document;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("testdata");
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| data.join("minicorpus/festivals.ttl"));
    let res = data.join("resources");
    let lexicon = Lexicon::load(&res.join("lemmas.tsv"), Some(&res.join("relations.tsv")))?;
    let frames = FrameMap::load(&res.join("frames.tsv"), Some(&res.join("frame_hierarchy.tsv")))?;

    let doc = load_ontology(&path, "example")?;
    for community in detect_communities(&build_intensional_graph(&doc)) {
        let vdoc = build_virtual_document(&community, &doc, "en");
        println!("{}: {}", vdoc.key(), vdoc.terms.join(" "));
        for strategy in [WsdStrategy::FirstSense, WsdStrategy::GraphPpr] {
            let g = ground(&vdoc, &lexicon, &frames, strategy);
            println!("  {:<11} synsets {:?}", strategy.to_string(), g.synsets.as_map());
            println!("  {:<11} frames  {:?}", "", g.frames.as_map());
        }
    }
    Ok(())
}
