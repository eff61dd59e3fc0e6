#![allow(dead_code)]

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use ontocc::pipeline::PipelineConfig;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn testdata(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("testdata").join(rel)
}

/// Pipeline configuration over the shipped toy resources.
pub fn toy_config(corpus: &Path, out: &Path) -> PipelineConfig {
    let mut c = PipelineConfig::new(
        corpus,
        out,
        testdata("resources/lemmas.tsv"),
        testdata("resources/frames.tsv"),
    );
    c.relations = Some(testdata("resources/relations.tsv"));
    c.frame_hierarchy = Some(testdata("resources/frame_hierarchy.tsv"));
    c.seed = 7;
    c
}

const WORDS: [&str; 28] = [
    "event", "happening", "festival", "celebration", "party", "guest", "participant", "agent",
    "performer", "organization", "member", "collection", "item", "place", "venue", "location",
    "address", "city", "street", "time", "span", "date", "widget", "sensor", "record", "measure",
    "document", "device",
];

fn camel(words: &[&str]) -> String {
    words
        .iter()
        .map(|w| {
            let mut c = w.chars();
            c.next().map(|f| f.to_ascii_uppercase().to_string() + c.as_str()).unwrap_or_default()
        })
        .collect()
}

/// A random Turtle ontology of roughly 200 triples over the toy vocabulary:
/// 24 labelled classes, 28 labelled object properties with domain and range,
/// 8 named subclass axioms and 8 existential restrictions.
pub fn synthetic_ontology(seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = format!(
        "@prefix : <http://example.org/synthetic{seed}#> .\n\
         @prefix owl: <http://www.w3.org/2002/07/owl#> .\n\
         @prefix rdfs: <http://www.w3.org/2000/01/rdf-schema#> .\n\n"
    );
    let mut classes: Vec<(String, String)> = Vec::new();
    while classes.len() < 24 {
        let n = rng.gen_range(1..=2);
        let words: Vec<&str> = WORDS.choose_multiple(&mut rng, n).copied().collect();
        let name = camel(&words);
        if !classes.iter().any(|(c, _)| *c == name) {
            classes.push((name, words.join(" ")));
        }
    }
    for (c, label) in &classes {
        let _ = writeln!(out, ":{c} a owl:Class ; rdfs:label \"{label}\"@en .");
    }
    for i in 0..28 {
        let word = WORDS.choose(&mut rng).unwrap();
        let d = &classes[rng.gen_range(0..classes.len())].0;
        let r = &classes[rng.gen_range(0..classes.len())].0;
        let _ = writeln!(
            out,
            ":has{}{i} a owl:ObjectProperty ; rdfs:label \"has {word}\"@en ; rdfs:domain :{d} ; rdfs:range :{r} .",
            camel(&[word])
        );
    }
    for _ in 0..8 {
        let a = &classes[rng.gen_range(0..classes.len())].0;
        let b = &classes[rng.gen_range(0..classes.len())].0;
        let _ = writeln!(out, ":{a} rdfs:subClassOf :{b} .");
    }
    for _ in 0..8 {
        let a = &classes[rng.gen_range(0..classes.len())].0;
        let b = &classes[rng.gen_range(0..classes.len())].0;
        let p = rng.gen_range(0..28);
        let _ = writeln!(
            out,
            ":{a} rdfs:subClassOf [ a owl:Restriction ; owl:onProperty :p{p} ; owl:someValuesFrom :{b} ] ."
        );
    }
    out
}

pub fn write_synthetic_corpus(dir: &Path, count: u64) {
    std::fs::create_dir_all(dir).unwrap();
    for i in 0..count {
        std::fs::write(dir.join(format!("synthetic{i:02}.ttl")), synthetic_ontology(i)).unwrap();
    }
}
