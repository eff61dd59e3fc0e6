//! Conceptual components, the frame-inheritance network between them, and
//! the catalogue that indexes both.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clustering::ClusteringResult;
use crate::grounding::{Bag, FrameMap, GroundedDocument, Lexicon};
use crate::vocab::local_name;

pub const SCHEMA_VERSION: u32 = 1;
pub const DESCRIPTION_CAP: usize = 200;

#[derive(Debug, Error, PartialEq)]
pub enum CatalogueError {
    #[error("no grounded document or fragment for community {0}")]
    MissingArtifacts(String),
    #[error("line {line}: expected `clusterId<TAB>name`")]
    BadOverride { line: usize },
    #[error("catalogue invariant violated: {0}")]
    Invariant(String),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Member {
    pub ontology: String,
    pub community: String,
    pub fragment_path: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConceptualComponent {
    pub id: usize,
    pub name: String,
    pub frames: Bag,
    pub synsets: Bag,
    pub description: String,
    pub members: Vec<Member>,
}

impl ConceptualComponent {
    pub fn ontologies(&self) -> BTreeSet<&str> {
        self.members.iter().map(|m| m.ontology.as_str()).collect()
    }
}

/// Cluster id → name, overriding the derived names.
pub type NameOverrides = BTreeMap<usize, String>;

pub fn parse_name_overrides(text: &str) -> Result<NameOverrides, CatalogueError> {
    let mut out = NameOverrides::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() || line.trim_start().starts_with('#') {
            continue;
        }
        let bad = || CatalogueError::BadOverride { line: i + 1 };
        let (id, name) = line.split_once('\t').ok_or_else(bad)?;
        let id: usize = id.trim().parse().map_err(|_| bad())?;
        let name = name.trim();
        if name.is_empty() {
            return Err(bad());
        }
        out.insert(id, name.to_string());
    }
    Ok(out)
}

/// Most frequent key, ties to the lexicographically smallest.
fn argmax(bag: &Bag) -> Option<&str> {
    let mut best: Option<(&str, usize)> = None;
    for (k, n) in bag.iter() {
        if best.is_none_or(|(_, b)| n > b) {
            best = Some((k, n));
        }
    }
    best.map(|(k, _)| k)
}

/// Local name of the top frame; else the first lemma of the top synset;
/// else `component-<id>`.
pub fn component_name(id: usize, frames: &Bag, synsets: &Bag, lexicon: Option<&Lexicon>) -> String {
    if let Some(f) = argmax(frames) {
        return local_name(f).to_string();
    }
    argmax(synsets)
        .and_then(|s| lexicon.and_then(|l| l.first_lemma(s)))
        .map(str::to_string)
        .unwrap_or_else(|| format!("component-{id}"))
}

/// Groups grounded documents by cluster. `fragment_paths` maps
/// `ontologyId/communityId` keys to the written fragment file.
pub fn build_components(
    result: &ClusteringResult,
    grounded: &[GroundedDocument],
    fragment_paths: &BTreeMap<String, String>,
    lexicon: Option<&Lexicon>,
    overrides: &NameOverrides,
) -> Result<Vec<ConceptualComponent>, CatalogueError> {
    let by_key: BTreeMap<String, &GroundedDocument> = grounded.iter().map(|g| (g.key(), g)).collect();
    let mut clusters: BTreeMap<usize, Vec<(&GroundedDocument, &String)>> = BTreeMap::new();
    for (key, &cluster) in &result.assignment {
        let missing = || CatalogueError::MissingArtifacts(key.clone());
        let doc = by_key.get(key).ok_or_else(missing)?;
        let path = fragment_paths.get(key).ok_or_else(missing)?;
        clusters.entry(cluster).or_default().push((doc, path));
    }

    let mut components = Vec::new();
    for (id, mut docs) in clusters {
        docs.sort_by(|a, b| {
            (&a.0.ontology_id, &a.0.community_id, a.1).cmp(&(&b.0.ontology_id, &b.0.community_id, b.1))
        });
        let mut frames = Bag::new();
        let mut synsets = Bag::new();
        let mut seen = BTreeSet::new();
        let mut terms = Vec::new();
        for (doc, _) in &docs {
            frames.merge(&doc.frames);
            synsets.merge(&doc.synsets);
            for t in &doc.terms {
                if terms.len() < DESCRIPTION_CAP && seen.insert(t.as_str()) {
                    terms.push(t.as_str());
                }
            }
        }
        let name = overrides
            .get(&id)
            .cloned()
            .unwrap_or_else(|| component_name(id, &frames, &synsets, lexicon));
        components.push(ConceptualComponent {
            id,
            name,
            frames,
            synsets,
            description: terms.join(" "),
            members: docs
                .iter()
                .map(|(d, p)| Member {
                    ontology: d.ontology_id.clone(),
                    community: d.community_id.clone(),
                    fragment_path: (*p).clone(),
                })
                .collect(),
        });
    }
    Ok(components)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FrameCounting {
    /// Each distinct frame of the source component counts once.
    #[default]
    Distinct,
    /// Each frame counts with its occurrence frequency.
    Multiplicity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct NetworkEdge {
    pub from: usize,
    pub to: usize,
    pub raw_count: usize,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ClusterNetwork {
    pub edges: Vec<NetworkEdge>,
    pub max_count: usize,
    pub counting: FrameCounting,
}

/// Frames of `from` with a strict ancestor among the frames of `to`,
/// counted per `counting`.
pub fn raw_count(from: &Bag, to: &Bag, frames: &FrameMap, counting: FrameCounting) -> usize {
    from.iter()
        .filter(|(f, _)| frames.ancestors(f).iter().any(|a| to.contains(a)))
        .map(|(_, n)| match counting {
            FrameCounting::Distinct => 1,
            FrameCounting::Multiplicity => n,
        })
        .sum()
}

/// Directed edges between every ordered pair of distinct components, weighted
/// by `rawCount / maxCount`.
pub fn build_network(
    components: &[ConceptualComponent],
    frames: &FrameMap,
    counting: FrameCounting,
) -> ClusterNetwork {
    let mut raw = Vec::new();
    for a in components {
        for b in components {
            if a.id != b.id {
                let n = raw_count(&a.frames, &b.frames, frames, counting);
                if n > 0 {
                    raw.push((a.id, b.id, n));
                }
            }
        }
    }
    let max_count = raw.iter().map(|e| e.2).max().unwrap_or(0);
    ClusterNetwork {
        edges: raw
            .into_iter()
            .map(|(from, to, raw_count)| NetworkEdge {
                from,
                to,
                raw_count,
                weight: raw_count as f64 / max_count as f64,
            })
            .collect(),
        max_count,
        counting,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Provenance {
    pub schema_version: u32,
    pub seed: u64,
    pub k_max: Option<usize>,
    pub k: usize,
    pub strategy: String,
    pub language: String,
    /// Resource role → SHA-256 of the file contents.
    pub resources: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Catalogue {
    pub components: Vec<ConceptualComponent>,
    pub network: ClusterNetwork,
    pub ontology_index: BTreeMap<String, Vec<usize>>,
    pub provenance: Provenance,
}

fn ontology_index(components: &[ConceptualComponent]) -> BTreeMap<String, Vec<usize>> {
    let mut index: BTreeMap<String, BTreeSet<usize>> = BTreeMap::new();
    for c in components {
        for m in &c.members {
            index.entry(m.ontology.clone()).or_default().insert(c.id);
        }
    }
    index
        .into_iter()
        .map(|(o, ids)| (o, ids.into_iter().collect()))
        .collect()
}

pub fn generate_catalogue(
    components: Vec<ConceptualComponent>,
    network: ClusterNetwork,
    provenance: Provenance,
) -> Result<Catalogue, CatalogueError> {
    let catalogue = Catalogue {
        ontology_index: ontology_index(&components),
        components,
        network,
        provenance,
    };
    catalogue.validate()?;
    Ok(catalogue)
}

impl Catalogue {
    pub fn validate(&self) -> Result<(), CatalogueError> {
        let fail = |m: String| Err(CatalogueError::Invariant(m));
        let ids: BTreeSet<usize> = self.components.iter().map(|c| c.id).collect();
        if ids.len() != self.components.len() {
            return fail("duplicate component ids".into());
        }
        if self.ontology_index != ontology_index(&self.components) {
            return fail("ontology index does not invert membership".into());
        }
        let max = self.network.edges.iter().map(|e| e.raw_count).max().unwrap_or(0);
        if max != self.network.max_count {
            return fail(format!("maxCount {} but largest edge {max}", self.network.max_count));
        }
        for e in &self.network.edges {
            if e.from == e.to || !ids.contains(&e.from) || !ids.contains(&e.to) {
                return fail(format!("edge {} -> {} has bad endpoints", e.from, e.to));
            }
            if e.raw_count == 0 || !(e.weight > 0.0 && e.weight <= 1.0) {
                return fail(format!("edge {} -> {} has weight {}", e.from, e.to, e.weight));
            }
            if e.weight != e.raw_count as f64 / max as f64 {
                return fail(format!("edge {} -> {} weight is not rawCount/maxCount", e.from, e.to));
            }
        }
        Ok(())
    }

    /// Pretty JSON with keys in sorted order.
    pub fn to_json(&self) -> String {
        let value = serde_json::to_value(self).expect("catalogue serialises");
        let mut s = serde_json::to_string_pretty(&value).expect("value serialises");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }

    pub fn component(&self, id: usize) -> Option<&ConceptualComponent> {
        self.components.iter().find(|c| c.id == id)
    }

    pub fn to_markdown(&self) -> String {
        let mut out = String::from("# Conceptual components\n");
        let top = |bag: &Bag, n: usize| {
            let mut items: Vec<(&str, usize)> = bag.iter().collect();
            items.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
            items
                .iter()
                .take(n)
                .map(|(k, c)| format!("{} ({c})", local_name(k)))
                .collect::<Vec<_>>()
                .join(", ")
        };
        for c in &self.components {
            let _ = write!(
                out,
                "\n## {} {}\n\n- Ontologies: {}\n- Frames: {}\n- Synsets: {}\n- Description: {}\n- Members:\n",
                c.id,
                c.name,
                c.ontologies().into_iter().collect::<Vec<_>>().join(", "),
                top(&c.frames, 10),
                top(&c.synsets, 10),
                c.description,
            );
            for m in &c.members {
                let _ = writeln!(out, "  - {} / {} (`{}`)", m.ontology, m.community, m.fragment_path);
            }
        }
        out.push_str("\n## Network\n\n");
        if self.network.edges.is_empty() {
            out.push_str("No inheritance links between components.\n");
        } else {
            out.push_str("| from | to | raw | w |\n|---|---|---|---|\n");
            for e in &self.network.edges {
                let _ = writeln!(out, "| {} | {} | {} | {:.2} |", e.from, e.to, e.raw_count, e.weight);
            }
        }
        out
    }

    /// The cluster network in DOT, one node per component.
    pub fn network_dot(&self) -> String {
        let mut out = String::from("digraph components {\n");
        for c in &self.components {
            let _ = writeln!(out, "  c{} [label={:?}];", c.id, format!("{}: {}", c.id, c.name));
        }
        for e in &self.network.edges {
            let _ = writeln!(out, "  c{} -> c{} [label=\"w={:.2}\"];", e.from, e.to, e.weight);
        }
        out.push_str("}\n");
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clustering::fixtures::doc;
    use proptest::prelude::*;

    fn bag(items: &[(&str, usize)]) -> Bag {
        let mut b = Bag::new();
        for (k, n) in items {
            b.add(*k, *n);
        }
        b
    }

    fn component(id: usize, frames: &[(&str, usize)], ontologies: &[&str]) -> ConceptualComponent {
        ConceptualComponent {
            id,
            name: format!("n{id}"),
            frames: bag(frames),
            synsets: Bag::new(),
            description: String::new(),
            members: ontologies
                .iter()
                .enumerate()
                .map(|(i, o)| Member {
                    ontology: o.to_string(),
                    community: format!("c{i}"),
                    fragment_path: format!("fragments/{o}/c{i}.ttl"),
                })
                .collect(),
        }
    }

    fn provenance() -> Provenance {
        Provenance {
            schema_version: SCHEMA_VERSION,
            seed: 7,
            k_max: None,
            k: 1,
            strategy: "graph-ppr".into(),
            language: "en".into(),
            resources: BTreeMap::new(),
        }
    }

    #[test]
    fn naming_ties_and_fallbacks() {
        assert_eq!(component_name(0, &bag(&[("B", 3), ("A", 3)]), &Bag::new(), None), "A");
        assert_eq!(
            component_name(0, &bag(&[("http://f.org/frame/Event", 4), ("A", 3)]), &Bag::new(), None),
            "Event"
        );
        let lex = Lexicon::parse("gathering\tn\tg.n.01\nmeeting\tn\tg.n.01\n", None).unwrap();
        let syn = bag(&[("g.n.01", 2), ("x.n.01", 1)]);
        assert_eq!(component_name(3, &Bag::new(), &syn, Some(&lex)), "gathering");
        assert_eq!(component_name(3, &Bag::new(), &syn, None), "component-3");
        assert_eq!(component_name(4, &Bag::new(), &Bag::new(), Some(&lex)), "component-4");
    }

    #[test]
    fn override_file() {
        let o = parse_name_overrides("# id\tname\n0\tParticipation\n\n2\tPlace \n").unwrap();
        assert_eq!(o, [(0, "Participation".into()), (2, "Place".into())].into());
        assert_eq!(parse_name_overrides("x\ty"), Err(CatalogueError::BadOverride { line: 1 }));
        assert_eq!(parse_name_overrides("1"), Err(CatalogueError::BadOverride { line: 1 }));
    }

    fn toy_hierarchy() -> FrameMap {
        FrameMap::parse("", Some("Social_event\tEvent\nParty\tSocial_event\nMeeting\tEvent\n")).unwrap()
    }

    #[test]
    fn unlinked_components_have_no_edges() {
        let net = build_network(
            &[component(0, &[("A", 1)], &["o"]), component(1, &[("B", 1)], &["o"])],
            &toy_hierarchy(),
            FrameCounting::Distinct,
        );
        assert!(net.edges.is_empty());
        assert_eq!(net.max_count, 0);
    }

    #[test]
    fn single_link() {
        let net = build_network(
            &[component(1, &[("Social_event", 1)], &["o"]), component(2, &[("Event", 1)], &["o"])],
            &toy_hierarchy(),
            FrameCounting::Distinct,
        );
        assert_eq!(
            net.edges,
            [NetworkEdge { from: 1, to: 2, raw_count: 1, weight: 1.0 }]
        );
    }

    /// a = {Party, Meeting}, b = {Event}, c = {Social_event}: Party and
    /// Meeting both descend from Event (raw 2), only Party from Social_event
    /// (raw 1).
    pub(crate) fn three_components() -> Vec<ConceptualComponent> {
        vec![
            component(0, &[("Party", 2), ("Meeting", 1)], &["x"]),
            component(1, &[("Event", 5)], &["y"]),
            component(2, &[("Social_event", 1)], &["z"]),
        ]
    }

    #[test]
    fn weights_are_normalised_by_max() {
        let net = build_network(&three_components(), &toy_hierarchy(), FrameCounting::Distinct);
        let w: BTreeMap<(usize, usize), (usize, f64)> =
            net.edges.iter().map(|e| ((e.from, e.to), (e.raw_count, e.weight))).collect();
        // c (Social_event) also descends from Event.
        assert_eq!(w[&(0, 1)], (2, 1.0));
        assert_eq!(w[&(0, 2)], (1, 0.5));
        assert_eq!(w[&(2, 1)], (1, 0.5));
        assert_eq!(w.len(), 3);

        let multi = build_network(&three_components(), &toy_hierarchy(), FrameCounting::Multiplicity);
        let w: BTreeMap<(usize, usize), usize> = multi.edges.iter().map(|e| ((e.from, e.to), e.raw_count)).collect();
        assert_eq!(w[&(0, 1)], 3);
        assert_eq!(w[&(0, 2)], 2);
    }

    fn result(assign: &[(&str, usize)]) -> ClusteringResult {
        ClusteringResult {
            k: assign.iter().map(|a| a.1).max().map_or(0, |m| m + 1),
            assignment: assign.iter().map(|(k, c)| (k.to_string(), *c)).collect(),
            centroids: Vec::new(),
            wcss_curve: BTreeMap::new(),
            vocabulary: Vec::new(),
            excluded: Vec::new(),
        }
    }

    #[test]
    fn components_aggregate_members() {
        let mut g1 = doc("b", "c0", &[("s1", 2)], &[("Event", 2)]);
        g1.terms = vec!["event".into(), "agent".into()];
        let mut g2 = doc("a", "c1", &[("s1", 1)], &[("Event", 1), ("Social_event", 1)]);
        g2.terms = vec!["party".into(), "event".into()];
        let g3 = doc("a", "c2", &[("s9", 1)], &[]);
        let paths: BTreeMap<String, String> = ["b/c0", "a/c1", "a/c2"]
            .iter()
            .map(|k| (k.to_string(), format!("fragments/{k}.ttl")))
            .collect();
        let r = result(&[("b/c0", 0), ("a/c1", 0), ("a/c2", 1)]);
        let comps = build_components(&r, &[g1, g2, g3], &paths, None, &[(1, "Other".into())].into()).unwrap();
        assert_eq!(comps.len(), 2);
        assert_eq!(comps[0].name, "Event");
        assert_eq!(comps[0].frames, bag(&[("Event", 3), ("Social_event", 1)]));
        assert_eq!(comps[0].synsets, bag(&[("s1", 3)]));
        // Members sorted by ontology first.
        assert_eq!(comps[0].members[0].ontology, "a");
        assert_eq!(comps[0].description, "party event agent");
        assert_eq!(comps[1].name, "Other");

        let missing = build_components(&r, &[], &paths, None, &NameOverrides::new());
        assert!(matches!(missing, Err(CatalogueError::MissingArtifacts(_))));
    }

    #[test]
    fn catalogue_round_trip_and_index() {
        let comps = vec![component(0, &[("Event", 1)], &["a", "b"]), component(1, &[("Social_event", 2)], &["b"])];
        let net = build_network(&comps, &toy_hierarchy(), FrameCounting::Distinct);
        let cat = generate_catalogue(comps, net, provenance()).unwrap();
        assert_eq!(cat.ontology_index["a"], [0]);
        assert_eq!(cat.ontology_index["b"], [0, 1]);
        let json = cat.to_json();
        assert_eq!(Catalogue::from_json(&json).unwrap(), cat);
        let value: serde_json::Value = serde_json::from_str(&json).unwrap();
        let keys: Vec<&String> = value.as_object().unwrap().keys().collect();
        assert_eq!(keys, ["components", "network", "ontologyIndex", "provenance"]);
        assert!(cat.network_dot().contains("c1 -> c0 [label=\"w=1.00\"]"));
        assert!(cat.to_markdown().contains("## 1 n1"));
    }

    #[test]
    fn single_component_catalogue() {
        let cat = generate_catalogue(
            vec![component(0, &[], &["a"])],
            ClusterNetwork::default(),
            provenance(),
        )
        .unwrap();
        assert!(cat.network.edges.is_empty());
        assert!(cat.to_markdown().contains("No inheritance links"));
    }

    #[test]
    fn tampered_catalogue_fails_validation() {
        let comps = three_components();
        let net = build_network(&comps, &toy_hierarchy(), FrameCounting::Distinct);
        let mut cat = generate_catalogue(comps, net, provenance()).unwrap();
        cat.network.edges[0].weight = 0.7;
        assert!(cat.validate().is_err());
        let mut cat2 = Catalogue::from_json(&generate_catalogue(three_components(), ClusterNetwork::default(), provenance()).unwrap().to_json()).unwrap();
        cat2.ontology_index.remove("x");
        assert!(cat2.validate().is_err());
    }

    #[test]
    fn transitive_counts_exceed_one_step_on_chains() {
        let map = FrameMap::parse("", Some("A\tB\nB\tC\n")).unwrap();
        let (from, to) = (bag(&[("A", 1), ("B", 1), ("C", 1)]), bag(&[("C", 1)]));
        assert_eq!(raw_count(&from, &to, &map, FrameCounting::Distinct), 2);
        let one_step = from.keys().filter(|f| map.parents(f).any(|p| to.contains(p))).count();
        assert_eq!(one_step, 1);
    }

    fn arb_hierarchy() -> impl Strategy<Value = FrameMap> {
        proptest::collection::vec((0usize..8, 0usize..8), 0..14).prop_map(|edges| {
            let mut m = FrameMap::new();
            for (a, b) in edges {
                if a > b {
                    m.add_inheritance(&format!("F{a}"), &format!("F{b}"));
                }
            }
            m
        })
    }

    fn arb_frames() -> impl Strategy<Value = Vec<usize>> {
        proptest::collection::vec(0usize..8, 0..6)
    }

    fn closed(frames: &[usize], map: &FrameMap) -> Bag {
        let mut bag = Bag::new();
        for f in frames {
            let f = format!("F{f}");
            for a in map.ancestors(&f) {
                bag.add(a, 1);
            }
            bag.add(f, 1);
        }
        bag
    }

    /// Any frame of `from` whose direct parent is a frame of `to`.
    fn one_step_linked(from: &Bag, to: &Bag, map: &FrameMap) -> bool {
        from.keys().any(|f| map.parents(f).any(|p| to.contains(p)))
    }

    proptest! {
        #[test]
        fn one_step_and_transitive_links_agree_on_closed_sets(
            map in arb_hierarchy(), a in arb_frames(), b in arb_frames(),
        ) {
            let (a, b) = (closed(&a, &map), closed(&b, &map));
            let transitive = raw_count(&a, &b, &map, FrameCounting::Distinct) > 0;
            prop_assert_eq!(transitive, one_step_linked(&a, &b, &map));
        }

        #[test]
        fn raw_count_is_monotone_in_target(
            map in arb_hierarchy(), a in arb_frames(), b in arb_frames(), extra in 0usize..8,
        ) {
            let a: Bag = a.iter().map(|f| format!("F{f}")).collect();
            let b: Bag = b.iter().map(|f| format!("F{f}")).collect();
            let mut bigger = b.clone();
            bigger.add(format!("F{extra}"), 1);
            prop_assert!(
                raw_count(&a, &bigger, &map, FrameCounting::Distinct)
                    >= raw_count(&a, &b, &map, FrameCounting::Distinct)
            );
        }

        #[test]
        fn weights_lie_in_unit_interval(map in arb_hierarchy(), sets in proptest::collection::vec(arb_frames(), 2..5)) {
            let comps: Vec<ConceptualComponent> = sets
                .iter()
                .enumerate()
                .map(|(i, s)| {
                    let mut c = component(i, &[], &["o"]);
                    c.frames = closed(s, &map);
                    c
                })
                .collect();
            let net = build_network(&comps, &map, FrameCounting::Distinct);
            if !net.edges.is_empty() {
                prop_assert!(net.edges.iter().any(|e| e.weight == 1.0));
            }
            for e in &net.edges {
                prop_assert!(e.weight > 0.0 && e.weight <= 1.0);
            }
            prop_assert!(generate_catalogue(comps, net, provenance()).is_ok());
        }
    }
}
