//! End-to-end extraction over a corpus directory, plus single-stage runs that
//! read and write the intermediate dump formats.
//!
//! Output layout under the output directory:
//!
//! ```text
//! fragments/<ontologyId>/<communityId>.ttl
//! catalogue.json  catalogue.md  network.dot  manifest.json
//! graphs/<ontologyId>.{dot,json}   (graph dump)
//! communities/<ontologyId>.json    (communities dump)
//! vdocs.tsv                        (vdocs dump)
//! grounded.json                    (ground dump)
//! clusters.json  wcss.csv          (cluster dump)
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use log::{info, warn};
use rayon::prelude::*;
use serde::{de::DeserializeOwned, Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::catalogue::{
    build_components, build_network, generate_catalogue, parse_name_overrides, Catalogue,
    CatalogueError, FrameCounting, NameOverrides, Provenance, SCHEMA_VERSION,
};
use crate::clustering::{cluster_corpus, single_cluster, ClusteringError, ClusteringResult};
use crate::community::{detect_communities, Community};
use crate::fragments::extract_fragment;
use crate::graph::{build_intensional_graph, IntensionalGraph};
use crate::grounding::{ground, FrameMap, GroundedDocument, Lexicon, ResourceError, WsdStrategy};
use crate::store::{load_ontology, OntologyDoc, RdfFormat, StoreError};
use crate::virtualdoc::{build_virtual_document, read_tsv, write_tsv, TsvError, VirtualDocument};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("{what} not found: {}", path.display())]
    MissingPath { what: &'static str, path: PathBuf },
    #[error("no ontologies found in {}", .0.display())]
    NoOntologies(PathBuf),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {source}", path.display())]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("{}: {source}", path.display())]
    Tsv {
        path: PathBuf,
        #[source]
        source: TsvError,
    },
    #[error(transparent)]
    Resource(#[from] ResourceError),
    #[error("{}: {source}", path.display())]
    Ontology {
        path: PathBuf,
        #[source]
        source: StoreError,
    },
    #[error("clustering failed: {0}")]
    Clustering(#[from] ClusteringError),
    #[error("catalogue failed: {0}")]
    Catalogue(#[from] CatalogueError),
    #[error("stage {stage} needs {} from an earlier run", path.display())]
    MissingPriorStage { stage: Stage, path: PathBuf },
    #[error("cannot start worker pool: {0}")]
    ThreadPool(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Graph,
    Communities,
    Vdocs,
    Ground,
    Cluster,
}

impl Stage {
    pub const ALL: [Stage; 5] = [
        Stage::Graph,
        Stage::Communities,
        Stage::Vdocs,
        Stage::Ground,
        Stage::Cluster,
    ];
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Graph => "graph",
            Stage::Communities => "communities",
            Stage::Vdocs => "vdocs",
            Stage::Ground => "ground",
            Stage::Cluster => "cluster",
        })
    }
}

impl FromStr for Stage {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Stage::ALL
            .into_iter()
            .find(|st| st.to_string() == s)
            .ok_or_else(|| format!("unknown stage `{s}`"))
    }
}

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub corpus_dir: PathBuf,
    pub out_dir: PathBuf,
    pub lemmas: PathBuf,
    pub relations: Option<PathBuf>,
    pub frames: PathBuf,
    pub frame_hierarchy: Option<PathBuf>,
    pub language: String,
    pub k_max: Option<usize>,
    pub seed: u64,
    pub wsd: WsdStrategy,
    pub names: Option<PathBuf>,
    pub dumps: BTreeSet<Stage>,
    pub strict: bool,
    /// Worker threads; `None` uses the available parallelism.
    pub jobs: Option<usize>,
    pub frame_counting: FrameCounting,
}

impl PipelineConfig {
    pub fn new(
        corpus_dir: impl Into<PathBuf>,
        out_dir: impl Into<PathBuf>,
        lemmas: impl Into<PathBuf>,
        frames: impl Into<PathBuf>,
    ) -> Self {
        Self {
            corpus_dir: corpus_dir.into(),
            out_dir: out_dir.into(),
            lemmas: lemmas.into(),
            relations: None,
            frames: frames.into(),
            frame_hierarchy: None,
            language: "en".into(),
            k_max: None,
            seed: 0,
            wsd: WsdStrategy::GraphPpr,
            names: None,
            dumps: BTreeSet::new(),
            strict: false,
            jobs: None,
            frame_counting: FrameCounting::Distinct,
        }
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let required = [
            ("corpus directory", Some(&self.corpus_dir)),
            ("lemma file", Some(&self.lemmas)),
            ("relations file", self.relations.as_ref()),
            ("frame file", Some(&self.frames)),
            ("frame hierarchy file", self.frame_hierarchy.as_ref()),
            ("names file", self.names.as_ref()),
        ];
        for (what, path) in required {
            if let Some(path) = path {
                if !path.exists() {
                    return Err(PipelineError::MissingPath {
                        what,
                        path: path.clone(),
                    });
                }
            }
        }
        Ok(())
    }

    fn resource_paths(&self) -> Vec<(&'static str, &Path)> {
        [
            ("lemmas", Some(self.lemmas.as_path())),
            ("relations", self.relations.as_deref()),
            ("frames", Some(self.frames.as_path())),
            ("frameHierarchy", self.frame_hierarchy.as_deref()),
            ("names", self.names.as_deref()),
        ]
        .into_iter()
        .filter_map(|(k, p)| p.map(|p| (k, p)))
        .collect()
    }

    fn load_resources(&self) -> Result<(Lexicon, FrameMap), PipelineError> {
        let lexicon = Lexicon::load(&self.lemmas, self.relations.as_deref())?;
        let frames = FrameMap::load(&self.frames, self.frame_hierarchy.as_deref())?;
        Ok((lexicon, frames))
    }

    fn pool(&self) -> Result<rayon::ThreadPool, PipelineError> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.jobs.unwrap_or(0))
            .build()
            .map_err(|e| PipelineError::ThreadPool(e.to_string()))
    }
}

/// Contents of `communities/<ontologyId>.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CommunityDump {
    pub ontology_id: String,
    pub communities: Vec<Community>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OntologyStats {
    pub id: String,
    pub file: String,
    pub triples: usize,
    pub nodes: usize,
    pub edges: usize,
    pub communities: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Skipped {
    pub file: String,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Manifest {
    pub ontologies: Vec<OntologyStats>,
    pub skipped: Vec<Skipped>,
    /// Communities that entered clustering.
    pub clustered: usize,
    /// Communities left out for grounding to nothing.
    pub excluded: usize,
}

#[derive(Debug)]
pub struct ExtractOutput {
    pub manifest: Manifest,
    pub catalogue: Catalogue,
}

/// Ontology files (`.ttl`, `.nt`) in a directory, sorted by name.
pub fn corpus_files(dir: &Path) -> Result<Vec<PathBuf>, PipelineError> {
    let entries = fs::read_dir(dir).map_err(|source| PipelineError::Io {
        path: dir.into(),
        source,
    })?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && RdfFormat::from_path(p).is_some())
        .collect();
    files.sort();
    Ok(files)
}

pub fn ontology_id(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

fn file_name(path: &Path) -> String {
    path.file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

struct Loaded {
    docs: Vec<(PathBuf, OntologyDoc)>,
    skipped: Vec<Skipped>,
}

fn load_corpus(config: &PipelineConfig) -> Result<Loaded, PipelineError> {
    let files = corpus_files(&config.corpus_dir)?;
    if files.is_empty() {
        return Err(PipelineError::NoOntologies(config.corpus_dir.clone()));
    }
    let results: Vec<(PathBuf, Result<OntologyDoc, StoreError>)> = files
        .into_par_iter()
        .map(|p| {
            let doc = load_ontology(&p, &ontology_id(&p));
            (p, doc)
        })
        .collect();

    let mut docs = Vec::new();
    let mut skipped = Vec::new();
    let mut ids = BTreeSet::new();
    for (path, result) in results {
        let reason = match result {
            Ok(doc) if ids.insert(doc.id().to_string()) => {
                docs.push((path, doc));
                continue;
            }
            Ok(doc) => format!("duplicate ontology id `{}`", doc.id()),
            Err(source) if config.strict => return Err(PipelineError::Ontology { path, source }),
            Err(e) => e.to_string(),
        };
        warn!("skipping {}: {reason}", path.display());
        skipped.push(Skipped {
            file: file_name(&path),
            reason,
        });
    }
    if docs.is_empty() {
        return Err(PipelineError::NoOntologies(config.corpus_dir.clone()));
    }
    Ok(Loaded { docs, skipped })
}

struct OntologyRun {
    stats: OntologyStats,
    graph: IntensionalGraph,
    communities: Vec<Community>,
    fragments: Vec<(String, String)>,
    vdocs: Vec<VirtualDocument>,
    grounded: Vec<GroundedDocument>,
}

fn process_ontology(
    path: &Path,
    doc: &OntologyDoc,
    lexicon: &Lexicon,
    frames: &FrameMap,
    config: &PipelineConfig,
) -> OntologyRun {
    let graph = build_intensional_graph(doc);
    let communities = detect_communities(&graph);
    let mut fragments = Vec::new();
    let mut vdocs = Vec::new();
    let mut grounded = Vec::new();
    for c in &communities {
        let fragment = extract_fragment(c, doc).expect("community built from this document");
        fragments.push((c.id.clone(), fragment.to_turtle()));
        let vdoc = build_virtual_document(c, doc, &config.language);
        grounded.push(ground(&vdoc, lexicon, frames, config.wsd));
        vdocs.push(vdoc);
    }
    OntologyRun {
        stats: OntologyStats {
            id: doc.id().to_string(),
            file: file_name(path),
            triples: doc.len(),
            nodes: graph.node_count(),
            edges: graph.edge_count(),
            communities: communities.len(),
        },
        graph,
        communities,
        fragments,
        vdocs,
        grounded,
    }
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), PipelineError> {
    let io = |source| PipelineError::Io {
        path: path.into(),
        source,
    };
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(io)?;
    }
    fs::write(path, contents).map_err(io)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), PipelineError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|source| PipelineError::Json {
        path: path.into(),
        source,
    })?;
    text.push('\n');
    write(path, text)
}

fn read_prior(stage: Stage, path: &Path) -> Result<String, PipelineError> {
    if !path.exists() {
        return Err(PipelineError::MissingPriorStage {
            stage,
            path: path.into(),
        });
    }
    fs::read_to_string(path).map_err(|source| PipelineError::Io {
        path: path.into(),
        source,
    })
}

fn read_json<T: DeserializeOwned>(stage: Stage, path: &Path) -> Result<T, PipelineError> {
    let text = read_prior(stage, path)?;
    serde_json::from_str(&text).map_err(|source| PipelineError::Json {
        path: path.into(),
        source,
    })
}

fn sha256_hex(path: &Path) -> Result<String, PipelineError> {
    let bytes = fs::read(path).map_err(|source| PipelineError::Io {
        path: path.into(),
        source,
    })?;
    Ok(Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect())
}

fn cluster_or_single(grounded: &[GroundedDocument], config: &PipelineConfig) -> Result<ClusteringResult, PipelineError> {
    match cluster_corpus(grounded, config.k_max, config.seed) {
        Err(ClusteringError::TooFewDocuments(n)) => {
            warn!("only {n} non-empty communities; placing them in a single cluster");
            Ok(single_cluster(grounded))
        }
        other => Ok(other?),
    }
}

fn graph_path(out: &Path, id: &str, ext: &str) -> PathBuf {
    out.join("graphs").join(format!("{id}.{ext}"))
}

fn communities_path(out: &Path, id: &str) -> PathBuf {
    out.join("communities").join(format!("{id}.json"))
}

pub fn fragment_path(ontology_id: &str, community_id: &str) -> String {
    format!("fragments/{ontology_id}/{community_id}.ttl")
}

/// Runs every stage and writes fragments, the catalogue and the manifest,
/// plus the stage dumps selected in `config.dumps`.
pub fn run_extract(config: &PipelineConfig) -> Result<ExtractOutput, PipelineError> {
    config.validate()?;
    let pool = config.pool()?;
    pool.install(|| extract_in_pool(config))
}

fn extract_in_pool(config: &PipelineConfig) -> Result<ExtractOutput, PipelineError> {
    let (lexicon, frames) = config.load_resources()?;
    let overrides: NameOverrides = match &config.names {
        Some(p) => parse_name_overrides(&fs::read_to_string(p).map_err(|source| PipelineError::Io {
            path: p.clone(),
            source,
        })?)?,
        None => NameOverrides::new(),
    };
    let loaded = load_corpus(config)?;
    info!("processing {} ontologies", loaded.docs.len());

    let started = Instant::now();
    let runs: Vec<OntologyRun> = loaded
        .docs
        .par_iter()
        .map(|(path, doc)| process_ontology(path, doc, &lexicon, &frames, config))
        .collect();

    let out = &config.out_dir;
    let mut fragment_paths = BTreeMap::new();
    for run in &runs {
        let id = &run.stats.id;
        for (cid, turtle) in &run.fragments {
            let rel = fragment_path(id, cid);
            write(&out.join(&rel), turtle)?;
            fragment_paths.insert(crate::virtualdoc::community_key(id, cid), rel);
        }
        if config.dumps.contains(&Stage::Graph) {
            write(&graph_path(out, id, "dot"), run.graph.to_dot())?;
            write_json(&graph_path(out, id, "json"), &run.graph)?;
        }
        if config.dumps.contains(&Stage::Communities) {
            write_community_dump(out, id, run.communities.clone())?;
        }
    }
    let vdocs: Vec<VirtualDocument> = runs.iter().flat_map(|r| r.vdocs.iter().cloned()).collect();
    let grounded: Vec<GroundedDocument> = runs.iter().flat_map(|r| r.grounded.iter().cloned()).collect();
    if config.dumps.contains(&Stage::Vdocs) {
        write(&out.join("vdocs.tsv"), write_tsv(&vdocs))?;
    }
    if config.dumps.contains(&Stage::Ground) {
        write_json(&out.join("grounded.json"), &grounded)?;
    }

    info!("per-ontology stages done in {:?}", started.elapsed());
    let clustering = cluster_or_single(&grounded, config)?;
    info!("clustering done at {:?}", started.elapsed());
    if config.dumps.contains(&Stage::Cluster) {
        write_cluster_dump(out, &clustering)?;
    }

    let components = build_components(&clustering, &grounded, &fragment_paths, Some(&lexicon), &overrides)?;
    let network = build_network(&components, &frames, config.frame_counting);
    let mut resources = BTreeMap::new();
    for (role, path) in config.resource_paths() {
        resources.insert(role.to_string(), sha256_hex(path)?);
    }
    let provenance = Provenance {
        schema_version: SCHEMA_VERSION,
        seed: config.seed,
        k_max: config.k_max,
        k: clustering.k,
        strategy: config.wsd.to_string(),
        language: config.language.clone(),
        resources,
    };
    let catalogue = generate_catalogue(components, network, provenance)?;
    write(&out.join("catalogue.json"), catalogue.to_json())?;
    write(&out.join("catalogue.md"), catalogue.to_markdown())?;
    write(&out.join("network.dot"), catalogue.network_dot())?;

    let manifest = Manifest {
        ontologies: runs.into_iter().map(|r| r.stats).collect(),
        skipped: loaded.skipped,
        clustered: clustering.assignment.len(),
        excluded: clustering.excluded.len(),
    };
    write_json(&out.join("manifest.json"), &manifest)?;
    Ok(ExtractOutput { manifest, catalogue })
}

fn write_community_dump(out: &Path, id: &str, communities: Vec<Community>) -> Result<(), PipelineError> {
    let dump = CommunityDump {
        ontology_id: id.to_string(),
        communities,
    };
    write_json(&communities_path(out, id), &dump)
}

fn write_cluster_dump(out: &Path, clustering: &ClusteringResult) -> Result<(), PipelineError> {
    write_json(&out.join("clusters.json"), clustering)?;
    write(&out.join("wcss.csv"), clustering.wcss_csv())
}

/// Runs one stage. `graph` reads the corpus; later stages read the previous
/// stage's dump from the output directory (`vdocs` also rereads the corpus
/// for labels).
pub fn run_stage(stage: Stage, config: &PipelineConfig) -> Result<(), PipelineError> {
    let pool = config.pool()?;
    pool.install(|| stage_in_pool(stage, config))
}

fn stage_in_pool(stage: Stage, config: &PipelineConfig) -> Result<(), PipelineError> {
    let out = &config.out_dir;
    match stage {
        Stage::Graph => {
            for (_, doc) in load_corpus(config)?.docs {
                let graph = build_intensional_graph(&doc);
                write(&graph_path(out, doc.id(), "dot"), graph.to_dot())?;
                write_json(&graph_path(out, doc.id(), "json"), &graph)?;
            }
        }
        Stage::Communities => {
            let graphs = prior_files(stage, &out.join("graphs"), "json")?;
            for path in graphs {
                let graph: IntensionalGraph = read_json(stage, &path)?;
                let communities = detect_communities(&graph);
                write_community_dump(out, &graph.ontology_id, communities)?;
            }
        }
        Stage::Vdocs => {
            let mut vdocs = Vec::new();
            for (_, doc) in load_corpus(config)?.docs {
                let dump: CommunityDump = read_json(stage, &communities_path(out, doc.id()))?;
                vdocs.extend(
                    dump.communities
                        .iter()
                        .map(|c| build_virtual_document(c, &doc, &config.language)),
                );
            }
            write(&out.join("vdocs.tsv"), write_tsv(&vdocs))?;
        }
        Stage::Ground => {
            let path = out.join("vdocs.tsv");
            let vdocs = read_tsv(&read_prior(stage, &path)?).map_err(|source| PipelineError::Tsv { path, source })?;
            let (lexicon, frames) = config.load_resources()?;
            let grounded: Vec<GroundedDocument> = vdocs
                .par_iter()
                .map(|v| ground(v, &lexicon, &frames, config.wsd))
                .collect();
            write_json(&out.join("grounded.json"), &grounded)?;
        }
        Stage::Cluster => {
            let grounded: Vec<GroundedDocument> = read_json(stage, &out.join("grounded.json"))?;
            write_cluster_dump(out, &cluster_or_single(&grounded, config)?)?;
        }
    }
    Ok(())
}

fn prior_files(stage: Stage, dir: &Path, ext: &str) -> Result<Vec<PathBuf>, PipelineError> {
    let missing = || PipelineError::MissingPriorStage {
        stage,
        path: dir.into(),
    };
    let entries = fs::read_dir(dir).map_err(|_| missing())?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == ext))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(missing());
    }
    Ok(files)
}
