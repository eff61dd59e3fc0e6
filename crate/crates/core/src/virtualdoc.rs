//! Bag-of-words "virtual documents" built from the labels of a community's
//! entities.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::community::Community;
use crate::fragments::community_entities;
use crate::store::OntologyDoc;
use crate::vocab::{is_reserved, local_name};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct VirtualDocument {
    pub community_id: String,
    pub ontology_id: String,
    /// Lowercase tokens, duplicate-free, in first-occurrence order.
    pub terms: Vec<String>,
}

impl VirtualDocument {
    /// Corpus-wide key `ontologyId/communityId`.
    pub fn key(&self) -> String {
        community_key(&self.ontology_id, &self.community_id)
    }
}

pub fn community_key(ontology_id: &str, community_id: &str) -> String {
    format!("{ontology_id}/{community_id}")
}

#[derive(Debug, Error, PartialEq)]
#[error("line {line}: expected `ontology<TAB>community<TAB>terms`")]
pub struct TsvError {
    pub line: usize,
}

#[derive(Clone, Copy, PartialEq)]
enum CharClass {
    Lower,
    Upper,
    Digit,
    Other,
}

fn class_of(c: char) -> CharClass {
    if c.is_uppercase() {
        CharClass::Upper
    } else if c.is_alphabetic() {
        CharClass::Lower
    } else if c.is_numeric() {
        CharClass::Digit
    } else {
        CharClass::Other
    }
}

/// Splits on non-alphanumerics, camelCase humps, acronym ends and
/// letter/digit transitions, then lowercases. No filtering.
pub fn split_identifier(text: &str) -> Vec<String> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut current = String::new();
    for (i, &c) in chars.iter().enumerate() {
        let class = class_of(c);
        if class == CharClass::Other {
            if !current.is_empty() {
                out.push(std::mem::take(&mut current));
            }
            continue;
        }
        if let Some(&prev) = i.checked_sub(1).map(|p| &chars[p]) {
            let prev_class = class_of(prev);
            let next_lower = chars
                .get(i + 1)
                .is_some_and(|&n| class_of(n) == CharClass::Lower);
            let boundary = match (prev_class, class) {
                (CharClass::Lower, CharClass::Upper) => true,
                (CharClass::Upper, CharClass::Upper) => next_lower,
                (CharClass::Digit, CharClass::Upper | CharClass::Lower) => true,
                (CharClass::Upper | CharClass::Lower, CharClass::Digit) => true,
                _ => false,
            };
            if boundary && !current.is_empty() {
                out.push(std::mem::take(&mut current));
            }
        }
        current.extend(c.to_lowercase());
    }
    if !current.is_empty() {
        out.push(current);
    }
    out
}

/// Single characters and pure numbers carry no vocabulary.
fn keep_token(token: &str) -> bool {
    token.chars().count() > 1 && !token.chars().all(char::is_numeric)
}

pub fn tokenize(text: &str) -> Vec<String> {
    split_identifier(text)
        .into_iter()
        .filter(|t| keep_token(t))
        .collect()
}

/// Tokens of an IRI's local name (fragment or last path segment).
pub fn local_id_tokens(iri: &str) -> Vec<String> {
    tokenize(local_name(iri))
}

/// Concatenates the labels (or local ids, when unlabelled) of the community's
/// classes and properties, in sorted IRI order. Entities in the rdf, rdfs, owl
/// and xsd namespaces are skipped; comments are never read.
pub fn build_virtual_document(
    community: &Community,
    doc: &OntologyDoc,
    language: &str,
) -> VirtualDocument {
    let (classes, properties) = community_entities(community);
    let entities: BTreeSet<&String> = classes.iter().chain(&properties).collect();

    let mut seen = BTreeSet::new();
    let mut terms = Vec::new();
    for entity in entities {
        if is_reserved(entity) {
            continue;
        }
        let labels = doc.labels_of(entity, language);
        let tokens: Vec<String> = if labels.is_empty() {
            local_id_tokens(entity)
        } else {
            labels.iter().flat_map(|l| tokenize(l)).collect()
        };
        for t in tokens {
            if seen.insert(t.clone()) {
                terms.push(t);
            }
        }
    }
    VirtualDocument {
        community_id: community.id.clone(),
        ontology_id: community.ontology_id.clone(),
        terms,
    }
}

/// One line per document: `ontologyId<TAB>communityId<TAB>space-joined terms`.
pub fn write_tsv(docs: &[VirtualDocument]) -> String {
    let mut out = String::new();
    for d in docs {
        out.push_str(&format!(
            "{}\t{}\t{}\n",
            d.ontology_id,
            d.community_id,
            d.terms.join(" ")
        ));
    }
    out
}

pub fn read_tsv(text: &str) -> Result<Vec<VirtualDocument>, TsvError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'))
        .map(|(i, line)| {
            let mut cols = line.splitn(3, '\t');
            match (cols.next(), cols.next(), cols.next()) {
                (Some(o), Some(c), terms) => Ok(VirtualDocument {
                    ontology_id: o.to_string(),
                    community_id: c.to_string(),
                    terms: terms
                        .unwrap_or("")
                        .split_whitespace()
                        .map(str::to_string)
                        .collect(),
                }),
                _ => Err(TsvError { line: i + 1 }),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{IGNode, IntensionalGraph};
    use crate::store::{parse_str, RdfFormat};
    use crate::vocab::xsd;
    use proptest::prelude::*;

    #[test]
    fn camel_case_local_ids() {
        assert_eq!(
            local_id_tokens("http://example.org/ontology#hasParticipant"),
            ["has", "participant"]
        );
        assert_eq!(local_id_tokens("http://example.org/onto#TimeSpan"), ["time", "span"]);
    }

    #[test]
    fn cidoc_style_ids() {
        let iri = "http://www.cidoc-crm.org/cidoc-crm/E5_Event";
        assert_eq!(split_identifier(local_name(iri)), ["e", "5", "event"]);
        assert_eq!(local_id_tokens(iri), ["event"]);
        assert_eq!(
            local_id_tokens("http://www.cidoc-crm.org/cidoc-crm/P14_carried_out_by"),
            ["carried", "out", "by"]
        );
    }

    #[test]
    fn acronyms_and_delimiters() {
        assert_eq!(split_identifier("HTTPServer"), ["http", "server"]);
        assert_eq!(split_identifier("has-part.of_x"), ["has", "part", "of", "x"]);
        assert_eq!(split_identifier("  "), Vec::<String>::new());
    }

    fn toy_doc() -> OntologyDoc {
        let text = std::fs::read_to_string(concat!(
            env!("CARGO_MANIFEST_DIR"),
            "/testdata/toy1.ttl"
        ))
        .unwrap();
        parse_str(&text, "toy1", RdfFormat::Turtle, None).unwrap()
    }

    fn toy(local: &str) -> String {
        format!("http://example.org/toy1#{local}")
    }

    #[test]
    fn toy1_document() {
        let doc = toy_doc();
        let nodes: BTreeSet<IGNode> = [
            IGNode::entity(toy("Event")),
            IGNode::entity(toy("Agent")),
            IGNode::entity(toy("TimeSpan")),
            IGNode::context(&toy("Event"), &toy("hasParticipant"), &toy("Agent")),
            IGNode::context(&toy("Event"), &toy("atTime"), &toy("TimeSpan")),
        ]
        .into();
        let c = Community::new("c0", &IntensionalGraph::new("toy1"), nodes);
        let v = build_virtual_document(&c, &doc, "en");
        // Sorted IRI order: Agent, Event, TimeSpan, atTime, hasParticipant.
        assert_eq!(
            v.terms,
            ["agent", "event", "time", "span", "at", "has", "participant"]
        );
    }

    #[test]
    fn reserved_namespaces_contribute_nothing() {
        let doc = OntologyDoc::from_triples("x", []);
        let c = Community::new(
            "c0",
            &IntensionalGraph::new("x"),
            [IGNode::entity(xsd::STRING)].into(),
        );
        assert!(build_virtual_document(&c, &doc, "en").terms.is_empty());
    }

    #[test]
    fn label_matching_local_id_appears_once() {
        let doc = parse_str(
            r#"<http://e.org/o#Event> <http://www.w3.org/2000/01/rdf-schema#label> "Event"@en ."#,
            "x",
            RdfFormat::Turtle,
            None,
        )
        .unwrap();
        let c = Community::new(
            "c0",
            &IntensionalGraph::new("x"),
            [
                IGNode::entity("http://e.org/o#Event"),
                IGNode::entity("http://e.org/o#event"),
            ]
            .into(),
        );
        assert_eq!(build_virtual_document(&c, &doc, "en").terms, ["event"]);
    }

    #[test]
    fn tsv_round_trip() {
        let docs = vec![
            VirtualDocument {
                community_id: "c0".into(),
                ontology_id: "a".into(),
                terms: vec!["event".into(), "agent".into()],
            },
            VirtualDocument {
                community_id: "c1".into(),
                ontology_id: "a".into(),
                terms: vec![],
            },
        ];
        assert_eq!(read_tsv(&write_tsv(&docs)).unwrap(), docs);
        assert_eq!(read_tsv("broken\n"), Err(TsvError { line: 1 }));
    }

    proptest! {
        #[test]
        fn tokens_are_clean(text in "\\PC{0,40}") {
            for t in tokenize(&text) {
                prop_assert!(!t.is_empty());
                prop_assert!(!t.chars().any(char::is_whitespace));
                prop_assert_eq!(t.to_lowercase(), t.clone());
                prop_assert!(t.chars().count() > 1);
            }
        }
    }
}
