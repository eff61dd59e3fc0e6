//! Retrieval of the OWL/RDF fragment (the observed pattern) behind a community.

use std::collections::{BTreeSet, VecDeque};

use thiserror::Error;

use crate::community::Community;
use crate::graph::IGNode;
use crate::store::{write_turtle, OntologyDoc, Term, Triple};
use crate::vocab::{owl, rdfs, XSD};

#[derive(Debug, Error, PartialEq)]
pub enum FragmentError {
    #[error("community belongs to ontology {community} but document is {document}")]
    OntologyMismatch { community: String, document: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fragment {
    pub community_id: String,
    pub ontology_id: String,
    pub triples: BTreeSet<Triple>,
    pub entities: BTreeSet<String>,
}

impl Fragment {
    pub fn to_turtle(&self) -> String {
        write_turtle(&self.triples)
    }
}

/// Classes (datatypes included) and properties mentioned by a community.
/// `owl:Thing` is left out of both.
pub fn community_entities(community: &Community) -> (BTreeSet<String>, BTreeSet<String>) {
    let mut classes = BTreeSet::new();
    let mut properties = BTreeSet::new();
    for node in &community.nodes {
        match node {
            IGNode::Entity(iri) => {
                classes.insert(iri.clone());
            }
            IGNode::Context {
                source,
                property,
                target,
            } => {
                classes.insert(source.clone());
                classes.insert(target.clone());
                properties.insert(property.clone());
            }
        }
    }
    classes.remove(owl::THING);
    properties.remove(owl::THING);
    (classes, properties)
}

const PROPERTY_AXIOMS: [&str; 5] = [
    rdfs::DOMAIN,
    rdfs::RANGE,
    owl::INVERSE_OF,
    rdfs::SUB_PROPERTY_OF,
    owl::EQUIVALENT_PROPERTY,
];

/// Collects the axioms describing a community's entities:
///
/// * `rdf:type` of every class and property (datatypes excepted);
/// * domain, range, inverse, super- and equivalent properties of properties;
/// * named super- and equivalent classes of classes;
/// * every restriction on a community property, with the axiom attaching it
///   to its class and its full blank-node closure;
/// * `rdfs:label`s of all entities.
pub fn extract_fragment(community: &Community, doc: &OntologyDoc) -> Result<Fragment, FragmentError> {
    if community.ontology_id != doc.id() {
        return Err(FragmentError::OntologyMismatch {
            community: community.ontology_id.clone(),
            document: doc.id().to_string(),
        });
    }
    let (classes, properties) = community_entities(community);
    let mut triples: BTreeSet<Triple> = BTreeSet::new();

    for entity in classes.iter().chain(&properties) {
        if !entity.starts_with(XSD) {
            triples.extend(doc.type_triples(entity));
        }
    }
    for p in &properties {
        triples.extend(
            doc.about(&Term::iri(p))
                .iter()
                .filter(|t| PROPERTY_AXIOMS.contains(&t.predicate.as_str()))
                .cloned(),
        );
        triples.extend(doc.inverse_of(p));
        triples.extend(doc.super_equiv_properties(p));
    }
    for c in &classes {
        triples.extend(doc.super_equiv_classes(c));
    }
    for link in doc.restriction_links() {
        if !properties.contains(&link.property) {
            continue;
        }
        let owner = Term::iri(&link.subject_class);
        triples.extend(
            doc.referencing(&link.restriction)
                .filter(|t| t.subject == owner)
                .cloned(),
        );
    }

    let mut entities: BTreeSet<String> = classes.iter().chain(&properties).cloned().collect();
    if community_mentions_thing(community) {
        entities.insert(owl::THING.to_string());
    }
    for e in &entities {
        triples.extend(
            doc.about(&Term::iri(e))
                .iter()
                .filter(|t| t.predicate == rdfs::LABEL)
                .cloned(),
        );
    }

    close_blank_nodes(doc, &mut triples);
    Ok(Fragment {
        community_id: community.id.clone(),
        ontology_id: community.ontology_id.clone(),
        triples,
        entities,
    })
}

fn community_mentions_thing(community: &Community) -> bool {
    community.nodes.iter().any(|n| match n {
        IGNode::Entity(iri) => iri == owl::THING,
        IGNode::Context { source, target, .. } => source == owl::THING || target == owl::THING,
    })
}

/// Adds every triple reachable through blank-node objects.
fn close_blank_nodes(doc: &OntologyDoc, triples: &mut BTreeSet<Triple>) {
    let mut queue: VecDeque<Term> = triples
        .iter()
        .filter(|t| t.object.is_blank())
        .map(|t| t.object.clone())
        .collect();
    let mut seen: BTreeSet<Term> = BTreeSet::new();
    while let Some(node) = queue.pop_front() {
        if !seen.insert(node.clone()) {
            continue;
        }
        for t in doc.about(&node) {
            if t.object.is_blank() {
                queue.push_back(t.object.clone());
            }
            triples.insert(t.clone());
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::IntensionalGraph;
    use crate::store::{parse_str, RdfFormat};

    const EX: &str = "http://example.org/onto#";

    fn ex(local: &str) -> String {
        format!("{EX}{local}")
    }

    fn ttl(body: &str) -> OntologyDoc {
        let text = format!(
            "@prefix : <{EX}> .\n@prefix owl: <http://www.w3.org/2002/07/owl#> .\n\
             @prefix rdfs: <http://www.w3.org/2000/01/rdf-schema#> .\n{body}"
        );
        parse_str(&text, "t", RdfFormat::Turtle, None).unwrap()
    }

    fn community(nodes: impl IntoIterator<Item = IGNode>) -> Community {
        let nodes: BTreeSet<IGNode> = nodes.into_iter().collect();
        let g = IntensionalGraph::new("t");
        Community::new("c0", &g, nodes)
    }

    #[test]
    fn entities_of_context_nodes() {
        let c = community([
            IGNode::context(owl::THING, &ex("q"), owl::THING),
            IGNode::entity(owl::THING),
        ]);
        let (classes, properties) = community_entities(&c);
        assert!(classes.is_empty());
        assert_eq!(properties, [ex("q")].into());

        let c = community([IGNode::entity(ex("A"))]);
        assert_eq!(community_entities(&c), ([ex("A")].into(), BTreeSet::new()));
    }

    #[test]
    fn mismatched_ontology() {
        let mut c = community([IGNode::entity(ex("A"))]);
        c.ontology_id = "other".into();
        assert!(matches!(
            extract_fragment(&c, &ttl(":A a owl:Class .")),
            Err(FragmentError::OntologyMismatch { .. })
        ));
    }

    #[test]
    fn property_free_community_gets_types_and_hierarchy() {
        let doc = ttl(
            ":A a owl:Class ; rdfs:subClassOf :B, [ owl:onProperty :p ; owl:someValuesFrom :C ] .
             :p a owl:ObjectProperty .",
        );
        let f = extract_fragment(&community([IGNode::entity(ex("A"))]), &doc).unwrap();
        assert_eq!(f.triples.len(), 2, "{:#?}", f.triples);
        assert!(f.triples.iter().all(|t| !t.object.is_blank()));
    }

    #[test]
    fn restrictions_on_outside_properties_are_excluded() {
        let doc = ttl(
            ":A rdfs:subClassOf [ owl:onProperty :p ; owl:someValuesFrom :B ] ,
                               [ owl:onProperty :q ; owl:someValuesFrom :C ] .",
        );
        let c = community([
            IGNode::entity(ex("A")),
            IGNode::context(&ex("A"), &ex("p"), &ex("B")),
            IGNode::entity(ex("B")),
        ]);
        let f = extract_fragment(&c, &doc).unwrap();
        // subClassOf link + onProperty + someValuesFrom of the :p restriction only.
        assert_eq!(f.triples.len(), 3);
        assert!(f
            .triples
            .iter()
            .all(|t| t.object != Term::iri(ex("q")) && t.object != Term::iri(ex("C"))));
    }

    #[test]
    fn nested_class_expressions_are_copied_whole() {
        let doc = ttl(
            ":A rdfs:subClassOf [ owl:onProperty :p ; owl:allValuesFrom [ owl:unionOf (:B :C) ] ] .",
        );
        let c = community([IGNode::entity(ex("A")), IGNode::context(&ex("A"), &ex("p"), &ex("B"))]);
        let f = extract_fragment(&c, &doc).unwrap();
        assert_eq!(f.triples.len(), doc.len());
        let back = parse_str(&f.to_turtle(), "t", RdfFormat::Turtle, None).unwrap();
        assert_eq!(back.len(), doc.len());
    }

    #[test]
    fn property_axioms_and_labels() {
        let doc = ttl(
            r#":p a owl:ObjectProperty ; rdfs:domain :A ; rdfs:range :B ;
                  owl:inverseOf :pInv ; rdfs:subPropertyOf :top ; rdfs:label "p"@en ;
                  rdfs:comment "ignored" .
               :r owl:equivalentProperty :p .
               :A rdfs:label "A" ."#,
        );
        let c = community([
            IGNode::entity(ex("A")),
            IGNode::context(&ex("A"), &ex("p"), &ex("B")),
        ]);
        let f = extract_fragment(&c, &doc).unwrap();
        assert_eq!(f.triples.len(), 8, "{:#?}", f.triples);
        assert!(f.triples.iter().all(|t| t.predicate != rdfs::COMMENT));
        assert_eq!(f.entities, [ex("A"), ex("B"), ex("p")].into());
    }
}
