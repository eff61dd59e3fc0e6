//! Clusters grounded community documents with k-means, choosing k at the
//! elbow of the WCSS curve.
//!
//! `cargo run --example clustering [corpus-dir] [seed]`

use std::path::{Path, PathBuf};

use ontocc::clustering::cluster_corpus;
use ontocc::community::detect_communities;
use ontocc::graph::build_intensional_graph;
use ontocc::grounding::{ground, FrameMap, Lexicon, WsdStrategy};
use ontocc::pipeline::{corpus_files, ontology_id};
use ontocc::store::load_ontology;
use ontocc::virtualdoc::build_virtual_document;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("testdata");
    let mut args = std::env::args().skip(1);
    let corpus = args.next().map(PathBuf::from).unwrap_or_else(|| data.join("minicorpus"));
    let seed: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(7);
    let res = data.join("resources");
    let lexicon = Lexicon::load(&res.join("lemmas.tsv"), Some(&res.join("relations.tsv")))?;
    let frames = FrameMap::load(&res.join("frames.tsv"), Some(&res.join("frame_hierarchy.tsv")))?;

    let mut grounded = Vec::new();
    for file in corpus_files(&corpus)? {
        let doc = load_ontology(&file, &ontology_id(&file))?;
        for community in detect_communities(&build_intensional_graph(&doc)) {
            let vdoc = build_virtual_document(&community, &doc, "en");
            grounded.push(ground(&vdoc, &lexicon, &frames, WsdStrategy::GraphPpr));
        }
    }

    let result = cluster_corpus(&grounded, None, seed)?;
    println!("{} documents, {} excluded as empty", grounded.len(), result.excluded.len());
    print!("{}", result.wcss_csv());
    println!("elbow at k = {}", result.k);
    for cluster in 0..result.k {
        let members: Vec<&str> = result.members(cluster).collect();
        println!("cluster {cluster}: {}", members.join(", "));
    }
    Ok(())
}
