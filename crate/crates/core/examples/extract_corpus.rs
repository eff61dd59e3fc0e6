//! Runs the whole pipeline over a corpus directory and writes fragments,
//! the catalogue, the manifest and every stage dump.
//!
//! `cargo run --example extract_corpus [corpus-dir] [out-dir]`

use std::path::{Path, PathBuf};

use ontocc::pipeline::{run_extract, PipelineConfig, Stage};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("testdata");
    let mut args = std::env::args().skip(1);
    let corpus = args.next().map(PathBuf::from).unwrap_or_else(|| data.join("minicorpus"));
    let out = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("ontocc-example"));
    let res = data.join("resources");

    let mut config = PipelineConfig::new(&corpus, &out, res.join("lemmas.tsv"), res.join("frames.tsv"));
    config.relations = Some(res.join("relations.tsv"));
    config.frame_hierarchy = Some(res.join("frame_hierarchy.tsv"));
    config.seed = 7;
    config.dumps = Stage::ALL.into_iter().collect();
    let result = run_extract(&config)?;

    for stats in &result.manifest.ontologies {
        println!(
            "{}: {} triples, {} nodes, {} edges, {} communities",
            stats.id, stats.triples, stats.nodes, stats.edges, stats.communities
        );
    }
    for component in &result.catalogue.components {
        println!("component {} \"{}\": {} members", component.id, component.name, component.members.len());
    }
    println!("wrote {}", out.display());
    Ok(())
}
