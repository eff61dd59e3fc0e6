//! Turns clustered communities into named conceptual components linked by
//! frame inheritance, and prints the catalogue as Markdown and DOT.
//!
//! `cargo run --example catalogue [corpus-dir]`

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use ontocc::catalogue::{
    build_components, build_network, generate_catalogue, FrameCounting, NameOverrides, Provenance,
    SCHEMA_VERSION,
};
use ontocc::clustering::cluster_corpus;
use ontocc::community::detect_communities;
use ontocc::graph::build_intensional_graph;
use ontocc::grounding::{ground, FrameMap, Lexicon, WsdStrategy};
use ontocc::pipeline::{corpus_files, fragment_path, ontology_id};
use ontocc::store::load_ontology;
use ontocc::virtualdoc::build_virtual_document;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("testdata");
    let corpus = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| data.join("minicorpus"));
    let res = data.join("resources");
    let lexicon = Lexicon::load(&res.join("lemmas.tsv"), Some(&res.join("relations.tsv")))?;
    let frames = FrameMap::load(&res.join("frames.tsv"), Some(&res.join("frame_hierarchy.tsv")))?;

    let mut grounded = Vec::new();
    let mut paths = BTreeMap::new();
    for file in corpus_files(&corpus)? {
        let id = ontology_id(&file);
        let doc = load_ontology(&file, &id)?;
        for community in detect_communities(&build_intensional_graph(&doc)) {
            let vdoc = build_virtual_document(&community, &doc, "en");
            paths.insert(vdoc.key(), fragment_path(&id, &community.id));
            grounded.push(ground(&vdoc, &lexicon, &frames, WsdStrategy::GraphPpr));
        }
    }
    let seed = 7;
    let clustering = cluster_corpus(&grounded, None, seed)?;
    let components = build_components(&clustering, &grounded, &paths, Some(&lexicon), &NameOverrides::new())?;
    let network = build_network(&components, &frames, FrameCounting::Distinct);
    let provenance = Provenance {
        schema_version: SCHEMA_VERSION,
        seed,
        k_max: None,
        k: clustering.k,
        strategy: WsdStrategy::GraphPpr.to_string(),
        language: "en".into(),
        resources: BTreeMap::new(),
    };
    let catalogue = generate_catalogue(components, network, provenance)?;

    let shared: BTreeSet<&str> = catalogue
        .components
        .iter()
        .filter(|c| c.ontologies().len() > 1)
        .map(|c| c.name.as_str())
        .collect();
    println!("components shared across ontologies: {shared:?}\n");
    println!("{}", catalogue.to_markdown());
    print!("{}", catalogue.network_dot());
    Ok(())
}
