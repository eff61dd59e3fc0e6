//! Intensional ontology graphs.
//!
//! Classes, datatypes and properties of an ontology are turned into an
//! undirected, unlabelled graph:
//!
//! * a property `p` with domain `d` and range `r` yields the labelled arc
//!   `p(d, r)`; a missing domain or range is read as `owl:Thing`;
//! * a restriction `c1 ⊑ [onProperty p ; <facet> c2]` yields `p(c1, c2)`;
//! * every arc `p(n1, n2)` is expanded into `n1 -- ⟨n1,p,n2⟩ -- n2`, where the
//!   middle node stands for `p` in the context of the two classes it links.
//!
//! Class hierarchy axioms are not part of the graph.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::store::{OntologyDoc, RestrictionKind, Term};
use crate::vocab::{local_name, owl, rdf, rdfs};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IGNode {
    /// A named class or datatype.
    Entity(String),
    /// A property in the context of the two entities it connects.
    Context {
        source: String,
        property: String,
        target: String,
    },
}

impl IGNode {
    pub fn entity(iri: impl Into<String>) -> Self {
        IGNode::Entity(iri.into())
    }

    pub fn context(source: &str, property: &str, target: &str) -> Self {
        IGNode::Context {
            source: source.to_string(),
            property: property.to_string(),
            target: target.to_string(),
        }
    }

    pub fn is_context(&self) -> bool {
        matches!(self, IGNode::Context { .. })
    }

    /// Short human-readable label built from local names.
    pub fn display_name(&self) -> String {
        match self {
            IGNode::Entity(iri) => local_name(iri).to_string(),
            IGNode::Context {
                source,
                property,
                target,
            } => format!(
                "{}-{}-{}",
                local_name(source),
                local_name(property),
                local_name(target)
            ),
        }
    }
}

/// `property(source, target)`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LabelledArc {
    pub property: String,
    pub source: String,
    pub target: String,
}

impl LabelledArc {
    pub fn new(property: &str, source: &str, target: &str) -> Self {
        Self {
            property: property.to_string(),
            source: source.to_string(),
            target: target.to_string(),
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum GraphInvariantError {
    #[error("edge between two entity nodes: {0:?} -- {1:?}")]
    EntityEdge(Box<IGNode>, Box<IGNode>),
    #[error("context node {0:?} is not wired to exactly its source and target")]
    BadContext(IGNode),
    #[error("edge endpoint {0:?} is not a node of the graph")]
    DanglingEdge(IGNode),
}

/// A simple undirected graph over [`IGNode`]s.
///
/// Edges are stored with the smaller endpoint first. Graphs produced by
/// [`build_intensional_graph`] satisfy [`IntensionalGraph::validate`]; graphs
/// built through [`IntensionalGraph::from_edges`] may be arbitrary, which is
/// what community fixtures need.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct IntensionalGraph {
    pub ontology_id: String,
    nodes: BTreeSet<IGNode>,
    edges: BTreeSet<(IGNode, IGNode)>,
}

impl IntensionalGraph {
    pub fn new(ontology_id: impl Into<String>) -> Self {
        Self {
            ontology_id: ontology_id.into(),
            ..Default::default()
        }
    }

    /// Builds an arbitrary simple graph. Self-loops are ignored.
    pub fn from_edges(
        ontology_id: impl Into<String>,
        edges: impl IntoIterator<Item = (IGNode, IGNode)>,
    ) -> Self {
        let mut g = Self::new(ontology_id);
        for (a, b) in edges {
            g.add_edge(a, b);
        }
        g
    }

    pub fn add_node(&mut self, node: IGNode) {
        self.nodes.insert(node);
    }

    pub fn add_edge(&mut self, a: IGNode, b: IGNode) {
        if a == b {
            self.nodes.insert(a);
            return;
        }
        let key = if a < b { (a, b) } else { (b, a) };
        self.nodes.insert(key.0.clone());
        self.nodes.insert(key.1.clone());
        self.edges.insert(key);
    }

    pub fn nodes(&self) -> &BTreeSet<IGNode> {
        &self.nodes
    }

    pub fn edges(&self) -> &BTreeSet<(IGNode, IGNode)> {
        &self.edges
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn has_edge(&self, a: &IGNode, b: &IGNode) -> bool {
        let key = if a < b {
            (a.clone(), b.clone())
        } else {
            (b.clone(), a.clone())
        };
        self.edges.contains(&key)
    }

    pub fn degree(&self, node: &IGNode) -> usize {
        self.edges
            .iter()
            .filter(|(a, b)| a == node || b == node)
            .count()
    }

    /// Nodes in sorted order with edges as index pairs into that order.
    pub fn indexed(&self) -> (Vec<&IGNode>, Vec<(usize, usize)>) {
        let nodes: Vec<&IGNode> = self.nodes.iter().collect();
        let index: BTreeMap<&IGNode, usize> =
            nodes.iter().enumerate().map(|(i, n)| (*n, i)).collect();
        let edges = self
            .edges
            .iter()
            .map(|(a, b)| (index[a], index[b]))
            .collect();
        (nodes, edges)
    }

    /// The subgraph induced by `keep`.
    pub fn induced(&self, keep: &BTreeSet<IGNode>) -> IntensionalGraph {
        IntensionalGraph {
            ontology_id: self.ontology_id.clone(),
            nodes: self.nodes.intersection(keep).cloned().collect(),
            edges: self
                .edges
                .iter()
                .filter(|(a, b)| keep.contains(a) && keep.contains(b))
                .cloned()
                .collect(),
        }
    }

    /// Checks the structural invariants of an intensional graph.
    pub fn validate(&self) -> Result<(), GraphInvariantError> {
        let mut incident: BTreeMap<&IGNode, BTreeSet<&IGNode>> = BTreeMap::new();
        for (a, b) in &self.edges {
            for n in [a, b] {
                if !self.nodes.contains(n) {
                    return Err(GraphInvariantError::DanglingEdge(n.clone()));
                }
            }
            if !a.is_context() && !b.is_context() {
                return Err(GraphInvariantError::EntityEdge(Box::new(a.clone()), Box::new(b.clone())));
            }
            incident.entry(a).or_default().insert(b);
            incident.entry(b).or_default().insert(a);
        }
        for node in &self.nodes {
            if let IGNode::Context { source, target, .. } = node {
                let expected: BTreeSet<IGNode> =
                    [IGNode::entity(source.as_str()), IGNode::entity(target.as_str())].into();
                let actual: BTreeSet<IGNode> = incident
                    .get(node)
                    .map(|s| s.iter().map(|n| (*n).clone()).collect())
                    .unwrap_or_default();
                if actual != expected {
                    return Err(GraphInvariantError::BadContext(node.clone()));
                }
            }
        }
        Ok(())
    }

    /// Graphviz rendering: entities as ellipses, context nodes as boxes.
    pub fn to_dot(&self) -> String {
        let (nodes, edges) = self.indexed();
        let mut out = String::new();
        let _ = writeln!(out, "graph \"{}\" {{", escape_dot(&self.ontology_id));
        for (i, node) in nodes.iter().enumerate() {
            let shape = if node.is_context() { "box" } else { "ellipse" };
            let _ = writeln!(
                out,
                "  n{i} [label=\"{}\", shape={shape}];",
                escape_dot(&node.display_name())
            );
        }
        for (a, b) in edges {
            let _ = writeln!(out, "  n{a} -- n{b};");
        }
        out.push_str("}\n");
        out
    }
}

fn escape_dot(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

fn is_annotation_property(doc: &OntologyDoc, p: &Term) -> bool {
    doc.has_type(p, owl::ANNOTATION_PROPERTY)
}

/// Arcs from domain/range declarations.
pub fn derive_arcs_r1(doc: &OntologyDoc) -> BTreeSet<LabelledArc> {
    let mut arcs = BTreeSet::new();
    for pair in doc.domain_range_pairs() {
        if pair.involves_blank() || is_annotation_property(doc, &Term::iri(&pair.property)) {
            continue;
        }
        if let (Term::Iri(d), Term::Iri(r)) = (&pair.domain, &pair.range) {
            arcs.insert(LabelledArc::new(&pair.property, d, r));
        }
    }

    // Properties lacking a domain or a range get owl:Thing on the missing side.
    let mut candidates: BTreeSet<&Term> = BTreeSet::new();
    for t in doc.triples() {
        let declared = t.predicate == rdf::TYPE
            && matches!(
                t.object.as_iri(),
                Some(owl::OBJECT_PROPERTY | owl::DATATYPE_PROPERTY | rdf::PROPERTY)
            );
        if declared || t.predicate == rdfs::DOMAIN || t.predicate == rdfs::RANGE {
            candidates.insert(&t.subject);
        }
    }
    let thing = Term::iri(owl::THING);
    for p in candidates {
        let Term::Iri(property) = p else { continue };
        if is_annotation_property(doc, p) {
            continue;
        }
        let mut domains: Vec<&Term> = doc.objects(p, rdfs::DOMAIN).collect();
        let mut ranges: Vec<&Term> = doc.objects(p, rdfs::RANGE).collect();
        if !domains.is_empty() && !ranges.is_empty() {
            continue;
        }
        if domains.is_empty() {
            domains.push(&thing);
        }
        if ranges.is_empty() {
            ranges.push(&thing);
        }
        for d in &domains {
            for r in &ranges {
                if let (Term::Iri(d), Term::Iri(r)) = (d, r) {
                    arcs.insert(LabelledArc::new(property, d, r));
                }
            }
        }
    }
    arcs
}

/// Arcs from property restrictions on named classes.
pub fn derive_arcs_r2(doc: &OntologyDoc) -> BTreeSet<LabelledArc> {
    let mut arcs = BTreeSet::new();
    for link in doc.restriction_links() {
        let targets: Vec<String> = match link.kind {
            RestrictionKind::SomeValuesFrom
            | RestrictionKind::AllValuesFrom
            | RestrictionKind::OnClass
            | RestrictionKind::OnDataRange => link.filler.as_iri().map(str::to_string).into_iter().collect(),
            RestrictionKind::HasValue => match &link.filler {
                Term::Iri(_) => {
                    let types: Vec<&str> = doc
                        .objects(&link.filler, rdf::TYPE)
                        .filter_map(Term::as_iri)
                        .filter(|t| *t != owl::NAMED_INDIVIDUAL)
                        .collect();
                    if types.len() == 1 {
                        vec![types[0].to_string()]
                    } else {
                        Vec::new()
                    }
                }
                _ => Vec::new(),
            },
            _ => cardinality_targets(doc, &link.restriction, &link.property),
        };
        for target in targets {
            arcs.insert(LabelledArc::new(&link.property, &link.subject_class, &target));
        }
    }
    arcs
}

/// Qualified class, else the named range of the property, else owl:Thing.
fn cardinality_targets(doc: &OntologyDoc, restriction: &Term, property: &str) -> Vec<String> {
    let qualified: Vec<&Term> = doc
        .objects(restriction, owl::ON_CLASS)
        .chain(doc.objects(restriction, owl::ON_DATA_RANGE))
        .collect();
    if !qualified.is_empty() {
        return qualified
            .into_iter()
            .filter_map(Term::as_iri)
            .map(str::to_string)
            .collect();
    }
    let ranges: Vec<String> = doc
        .objects(&Term::iri(property), rdfs::RANGE)
        .filter_map(Term::as_iri)
        .map(str::to_string)
        .collect();
    if ranges.is_empty() {
        vec![owl::THING.to_string()]
    } else {
        ranges
    }
}

/// Replaces every labelled arc by two unlabelled edges through a context node.
pub fn expand_r3<'a>(
    ontology_id: &str,
    arcs: impl IntoIterator<Item = &'a LabelledArc>,
) -> IntensionalGraph {
    let mut g = IntensionalGraph::new(ontology_id);
    for arc in arcs {
        let ctx = IGNode::context(&arc.source, &arc.property, &arc.target);
        g.add_edge(IGNode::entity(arc.source.as_str()), ctx.clone());
        g.add_edge(ctx, IGNode::entity(arc.target.as_str()));
    }
    g
}

pub fn derive_arcs(doc: &OntologyDoc) -> BTreeSet<LabelledArc> {
    let mut arcs = derive_arcs_r1(doc);
    arcs.extend(derive_arcs_r2(doc));
    arcs
}

pub fn build_intensional_graph(doc: &OntologyDoc) -> IntensionalGraph {
    expand_r3(doc.id(), &derive_arcs(doc))
}
