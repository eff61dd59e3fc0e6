//! Word-sense disambiguation and frame evocation over local resource files.
//!
//! Resource formats (UTF-8, `#` comment lines and blank lines ignored):
//!
//! | file            | line format                         |
//! |-----------------|-------------------------------------|
//! | lemmas          | `lemma<TAB>pos<TAB>syn1,syn2,…`     |
//! | relations       | `synsetA<TAB>synsetB` (undirected)  |
//! | frame matches   | `synset<TAB>frame`                  |
//! | frame hierarchy | `childFrame<TAB>parentFrame`        |
//!
//! Synsets in a lemma line are listed by sense rank, most frequent first.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::virtualdoc::VirtualDocument;

#[derive(Debug, Error)]
pub enum ResourceError {
    #[error("cannot read {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{source_name}:{line}: {message}")]
    Format {
        source_name: String,
        line: usize,
        message: String,
    },
    #[error("frame hierarchy has a cycle through {0}")]
    Cycle(String),
}

/// A multiset of identifiers.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Bag(BTreeMap<String, usize>);

impl Bag {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, key: impl Into<String>, n: usize) {
        if n > 0 {
            *self.0.entry(key.into()).or_default() += n;
        }
    }

    pub fn count(&self, key: &str) -> usize {
        self.0.get(key).copied().unwrap_or(0)
    }

    pub fn contains(&self, key: &str) -> bool {
        self.0.contains_key(key)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, usize)> {
        self.0.iter().map(|(k, &v)| (k.as_str(), v))
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.0.keys().map(String::as_str)
    }

    /// Number of distinct elements.
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn total(&self) -> usize {
        self.0.values().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn merge(&mut self, other: &Bag) {
        for (k, n) in other.iter() {
            self.add(k, n);
        }
    }

    pub fn as_map(&self) -> &BTreeMap<String, usize> {
        &self.0
    }
}

impl<S: Into<String>> FromIterator<S> for Bag {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        let mut bag = Bag::new();
        for s in iter {
            bag.add(s, 1);
        }
        bag
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Pos {
    Noun,
    Verb,
    Adjective,
    Adverb,
}

impl Pos {
    /// Lookup order for tokens of unknown part of speech.
    pub const LOOKUP_ORDER: [Pos; 3] = [Pos::Noun, Pos::Verb, Pos::Adjective];
}

impl FromStr for Pos {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "n" | "noun" => Ok(Pos::Noun),
            "v" | "verb" => Ok(Pos::Verb),
            "a" | "s" | "adj" | "adjective" => Ok(Pos::Adjective),
            "r" | "adv" | "adverb" => Ok(Pos::Adverb),
            other => Err(format!("unknown part of speech `{other}`")),
        }
    }
}

/// Sense inventory plus an undirected synset relation graph.
#[derive(Debug, Clone, Default)]
pub struct Lexicon {
    senses: BTreeMap<(String, Pos), Vec<String>>,
    relations: BTreeMap<String, BTreeSet<String>>,
    synset_lemmas: BTreeMap<String, Vec<String>>,
}

impl Lexicon {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_senses(&mut self, lemma: &str, pos: Pos, synsets: &[&str]) {
        let lemma = lemma.to_lowercase();
        let entry = self.senses.entry((lemma.clone(), pos)).or_default();
        for s in synsets {
            if !entry.iter().any(|e| e == s) {
                entry.push((*s).to_string());
            }
            let lemmas = self.synset_lemmas.entry((*s).to_string()).or_default();
            if !lemmas.contains(&lemma) {
                lemmas.push(lemma.clone());
            }
        }
    }

    pub fn add_relation(&mut self, a: &str, b: &str) {
        if a == b {
            return;
        }
        self.relations
            .entry(a.to_string())
            .or_default()
            .insert(b.to_string());
        self.relations
            .entry(b.to_string())
            .or_default()
            .insert(a.to_string());
    }

    pub fn parse(lemmas: &str, relations: Option<&str>) -> Result<Self, ResourceError> {
        let mut lex = Lexicon::new();
        for (line, cols) in records(lemmas) {
            let [lemma, pos, synsets] = cols[..] else {
                return Err(format_error("lemmas", line, "expected 3 tab-separated columns"));
            };
            let pos: Pos = pos
                .parse()
                .map_err(|m: String| format_error("lemmas", line, &m))?;
            let synsets: Vec<&str> = synsets
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .collect();
            lex.add_senses(lemma, pos, &synsets);
        }
        if let Some(relations) = relations {
            for (line, cols) in records(relations) {
                let [a, b] = cols[..] else {
                    return Err(format_error("relations", line, "expected 2 tab-separated columns"));
                };
                lex.add_relation(a, b);
            }
        }
        Ok(lex)
    }

    pub fn load(lemmas: &Path, relations: Option<&Path>) -> Result<Self, ResourceError> {
        let lemmas = read(lemmas)?;
        let relations = relations.map(read).transpose()?;
        Self::parse(&lemmas, relations.as_deref())
    }

    /// Ranked senses of a token, trying noun, then verb, then adjective.
    pub fn candidates(&self, token: &str) -> Option<&[String]> {
        let token = token.to_lowercase();
        Pos::LOOKUP_ORDER.iter().find_map(|&pos| {
            self.senses
                .get(&(token.clone(), pos))
                .filter(|s| !s.is_empty())
                .map(Vec::as_slice)
        })
    }

    pub fn related(&self, synset: &str) -> impl Iterator<Item = &str> {
        self.relations
            .get(synset)
            .into_iter()
            .flatten()
            .map(String::as_str)
    }

    pub fn has_relations(&self) -> bool {
        !self.relations.is_empty()
    }

    /// The first lemma listed for a synset.
    pub fn first_lemma(&self, synset: &str) -> Option<&str> {
        self.synset_lemmas
            .get(synset)
            .and_then(|l| l.first())
            .map(String::as_str)
    }
}

/// Synset → frame matches and the frame inheritance hierarchy.
#[derive(Debug, Clone, Default)]
pub struct FrameMap {
    close_match: BTreeMap<String, BTreeSet<String>>,
    inherits: BTreeMap<String, BTreeSet<String>>,
}

impl FrameMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_match(&mut self, synset: &str, frame: &str) {
        self.close_match
            .entry(synset.to_string())
            .or_default()
            .insert(frame.to_string());
    }

    /// Records `child` inheriting from `parent`. Call [`FrameMap::validate`]
    /// afterwards when building by hand.
    pub fn add_inheritance(&mut self, child: &str, parent: &str) {
        self.inherits
            .entry(child.to_string())
            .or_default()
            .insert(parent.to_string());
    }

    pub fn parse(close_match: &str, hierarchy: Option<&str>) -> Result<Self, ResourceError> {
        let mut map = FrameMap::new();
        for (line, cols) in records(close_match) {
            let [synset, frame] = cols[..] else {
                return Err(format_error("frames", line, "expected 2 tab-separated columns"));
            };
            map.add_match(synset, frame);
        }
        if let Some(hierarchy) = hierarchy {
            for (line, cols) in records(hierarchy) {
                let [child, parent] = cols[..] else {
                    return Err(format_error(
                        "frame hierarchy",
                        line,
                        "expected 2 tab-separated columns",
                    ));
                };
                map.add_inheritance(child, parent);
            }
        }
        map.validate()?;
        Ok(map)
    }

    pub fn load(close_match: &Path, hierarchy: Option<&Path>) -> Result<Self, ResourceError> {
        let close_match = read(close_match)?;
        let hierarchy = hierarchy.map(read).transpose()?;
        Self::parse(&close_match, hierarchy.as_deref())
    }

    /// Rejects cyclic inheritance.
    pub fn validate(&self) -> Result<(), ResourceError> {
        #[derive(Clone, Copy, PartialEq)]
        enum Mark {
            Active,
            Done,
        }
        fn visit<'a>(
            frame: &'a str,
            inherits: &'a BTreeMap<String, BTreeSet<String>>,
            marks: &mut BTreeMap<&'a str, Mark>,
        ) -> Result<(), ResourceError> {
            match marks.get(frame) {
                Some(Mark::Done) => return Ok(()),
                Some(Mark::Active) => return Err(ResourceError::Cycle(frame.to_string())),
                None => {}
            }
            marks.insert(frame, Mark::Active);
            for parent in inherits.get(frame).into_iter().flatten() {
                visit(parent, inherits, marks)?;
            }
            marks.insert(frame, Mark::Done);
            Ok(())
        }
        let mut marks = BTreeMap::new();
        for frame in self.inherits.keys() {
            visit(frame, &self.inherits, &mut marks)?;
        }
        Ok(())
    }

    pub fn frames_of(&self, synset: &str) -> impl Iterator<Item = &str> {
        self.close_match
            .get(synset)
            .into_iter()
            .flatten()
            .map(String::as_str)
    }

    pub fn parents(&self, frame: &str) -> impl Iterator<Item = &str> {
        self.inherits
            .get(frame)
            .into_iter()
            .flatten()
            .map(String::as_str)
    }

    /// Strict transitive ancestors of a frame.
    pub fn ancestors(&self, frame: &str) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        let mut stack: Vec<&str> = self.parents(frame).collect();
        while let Some(f) = stack.pop() {
            if out.insert(f.to_string()) {
                stack.extend(self.parents(f));
            }
        }
        out
    }

    pub fn inherits_from(&self, child: &str, ancestor: &str) -> bool {
        self.ancestors(child).contains(ancestor)
    }
}

fn read(path: &Path) -> Result<String, ResourceError> {
    std::fs::read_to_string(path).map_err(|source| ResourceError::Io {
        path: path.into(),
        source,
    })
}

fn records(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
        .map(|(i, l)| (i, l.split('\t').map(str::trim).collect()))
}

fn format_error(source_name: &str, line: usize, message: &str) -> ResourceError {
    ResourceError::Format {
        source_name: source_name.to_string(),
        line,
        message: message.to_string(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum WsdStrategy {
    #[serde(rename = "first-sense")]
    FirstSense,
    #[default]
    #[serde(rename = "graph-ppr")]
    GraphPpr,
}

impl FromStr for WsdStrategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "first-sense" => Ok(WsdStrategy::FirstSense),
            "graph-ppr" => Ok(WsdStrategy::GraphPpr),
            other => Err(format!(
                "unknown strategy `{other}` (expected first-sense or graph-ppr)"
            )),
        }
    }
}

impl fmt::Display for WsdStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WsdStrategy::FirstSense => "first-sense",
            WsdStrategy::GraphPpr => "graph-ppr",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PprConfig {
    pub damping: f64,
    pub max_iterations: usize,
    /// L1 change below which iteration stops early.
    pub tolerance: f64,
}

impl Default for PprConfig {
    fn default() -> Self {
        Self {
            damping: 0.85,
            max_iterations: 30,
            tolerance: 1e-9,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PprOutcome {
    pub scores: BTreeMap<String, f64>,
    pub iterations: usize,
    /// Score mass after normalisation, one entry per iteration.
    pub mass: Vec<f64>,
}

/// Personalized PageRank over the lexicon's relation graph, restarting
/// uniformly on `seeds`. Mass of nodes without relations returns to the seeds.
pub fn personalized_pagerank(
    lexicon: &Lexicon,
    seeds: &BTreeSet<String>,
    config: PprConfig,
) -> PprOutcome {
    let mut ids: BTreeSet<&str> = lexicon.relations.keys().map(String::as_str).collect();
    ids.extend(seeds.iter().map(String::as_str));
    let ids: Vec<&str> = ids.into_iter().collect();
    let index: BTreeMap<&str, usize> = ids.iter().enumerate().map(|(i, s)| (*s, i)).collect();
    let n = ids.len();
    if n == 0 || seeds.is_empty() {
        return PprOutcome {
            scores: BTreeMap::new(),
            iterations: 0,
            mass: Vec::new(),
        };
    }

    let neighbours: Vec<Vec<usize>> = ids
        .iter()
        .map(|s| lexicon.related(s).map(|r| index[r]).collect())
        .collect();
    let mut restart = vec![0.0; n];
    for s in seeds {
        restart[index[s.as_str()]] = 1.0 / seeds.len() as f64;
    }

    let d = config.damping;
    let mut rank = restart.clone();
    let mut mass = Vec::new();
    let mut iterations = 0;
    for _ in 0..config.max_iterations {
        iterations += 1;
        let mut next: Vec<f64> = restart.iter().map(|v| (1.0 - d) * v).collect();
        let mut dangling = 0.0;
        for (u, out) in neighbours.iter().enumerate() {
            if out.is_empty() {
                dangling += rank[u];
                continue;
            }
            let share = d * rank[u] / out.len() as f64;
            for &w in out {
                next[w] += share;
            }
        }
        for (x, v) in next.iter_mut().zip(&restart) {
            *x += d * dangling * v;
        }
        let total: f64 = next.iter().sum();
        for x in next.iter_mut() {
            *x /= total;
        }
        mass.push(next.iter().sum());
        let delta: f64 = next.iter().zip(&rank).map(|(a, b)| (a - b).abs()).sum();
        rank = next;
        if delta < config.tolerance {
            break;
        }
    }

    PprOutcome {
        scores: ids.iter().map(|s| s.to_string()).zip(rank).collect(),
        iterations,
        mass,
    }
}

/// One synset per token found in the lexicon, in token order.
pub fn disambiguate_tokens(
    tokens: &[String],
    lexicon: &Lexicon,
    strategy: WsdStrategy,
) -> Vec<(String, String)> {
    let candidates: Vec<(&String, &[String])> = tokens
        .iter()
        .filter_map(|t| lexicon.candidates(t).map(|c| (t, c)))
        .collect();
    match strategy {
        WsdStrategy::FirstSense => candidates
            .into_iter()
            .map(|(t, c)| (t.clone(), c[0].clone()))
            .collect(),
        WsdStrategy::GraphPpr => {
            let seeds: BTreeSet<String> = candidates
                .iter()
                .flat_map(|(_, c)| c.iter().cloned())
                .collect();
            let ppr = personalized_pagerank(lexicon, &seeds, PprConfig::default());
            candidates
                .into_iter()
                .map(|(t, c)| {
                    // Strictly greater only, so ties keep the better-ranked sense.
                    let mut best = &c[0];
                    let mut best_score = ppr.scores.get(best).copied().unwrap_or(0.0);
                    for s in &c[1..] {
                        let score = ppr.scores.get(s).copied().unwrap_or(0.0);
                        if score > best_score {
                            best = s;
                            best_score = score;
                        }
                    }
                    (t.clone(), best.clone())
                })
                .collect()
        }
    }
}

pub fn disambiguate(tokens: &[String], lexicon: &Lexicon, strategy: WsdStrategy) -> Bag {
    disambiguate_tokens(tokens, lexicon, strategy)
        .into_iter()
        .map(|(_, s)| s)
        .collect()
}

/// Frames matched by the synsets, each expanded with its ancestors. Counts
/// follow synset multiplicity; an ancestor is counted once per directly
/// evoked frame occurrence.
pub fn evoke_frames(synsets: &Bag, frames: &FrameMap) -> Bag {
    let mut out = Bag::new();
    for (synset, n) in synsets.iter() {
        for frame in frames.frames_of(synset) {
            out.add(frame, n);
            for ancestor in frames.ancestors(frame) {
                out.add(ancestor, n);
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct GroundedDocument {
    pub community_id: String,
    pub ontology_id: String,
    /// The virtual document's terms, kept for cluster descriptions.
    pub terms: Vec<String>,
    pub synsets: Bag,
    pub frames: Bag,
}

impl GroundedDocument {
    pub fn key(&self) -> String {
        crate::virtualdoc::community_key(&self.ontology_id, &self.community_id)
    }

    pub fn is_empty(&self) -> bool {
        self.synsets.is_empty() && self.frames.is_empty()
    }
}

pub fn ground(
    vdoc: &VirtualDocument,
    lexicon: &Lexicon,
    frames: &FrameMap,
    strategy: WsdStrategy,
) -> GroundedDocument {
    let synsets = disambiguate(&vdoc.terms, lexicon, strategy);
    let frames = evoke_frames(&synsets, frames);
    GroundedDocument {
        community_id: vdoc.community_id.clone(),
        ontology_id: vdoc.ontology_id.clone(),
        terms: vdoc.terms.clone(),
        synsets,
        frames,
    }
}
