//! In-memory triple store for one ontology document.
//!
//! Documents are parsed from Turtle or N-Triples, sorted, deduplicated and
//! indexed by subject and object. Blank nodes are renamed `b0`, `b1`, … in
//! order of first appearance so that repeated loads of the same file yield
//! identical documents.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::ops::Range;
use std::path::{Path, PathBuf};

use oxttl::{NTriplesParser, TurtleParser, TurtleSerializer};
use thiserror::Error;

use crate::vocab::{owl, rdf, rdfs, xsd, PREFIXES};

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("parse error at line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("cannot read {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("unsupported RDF format for {} (expected .ttl or .nt)", .0.display())]
    UnsupportedFormat(PathBuf),
}

/// An RDF term.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Iri(String),
    /// Document-scoped blank node id.
    Blank(String),
    Literal {
        lexical: String,
        datatype: Option<String>,
        lang: Option<String>,
    },
}

impl Term {
    pub fn iri(s: impl Into<String>) -> Self {
        Term::Iri(s.into())
    }

    pub fn blank(s: impl Into<String>) -> Self {
        Term::Blank(s.into())
    }

    pub fn literal(s: impl Into<String>) -> Self {
        Term::Literal {
            lexical: s.into(),
            datatype: None,
            lang: None,
        }
    }

    pub fn lang_literal(s: impl Into<String>, lang: impl Into<String>) -> Self {
        Term::Literal {
            lexical: s.into(),
            datatype: None,
            lang: Some(lang.into()),
        }
    }

    pub fn as_iri(&self) -> Option<&str> {
        match self {
            Term::Iri(iri) => Some(iri),
            _ => None,
        }
    }

    pub fn is_blank(&self) -> bool {
        matches!(self, Term::Blank(_))
    }

    fn to_ox(&self) -> oxrdf::Term {
        match self {
            Term::Iri(iri) => oxrdf::NamedNode::new_unchecked(iri.clone()).into(),
            Term::Blank(id) => oxrdf::BlankNode::new_unchecked(id.clone()).into(),
            Term::Literal {
                lexical,
                datatype,
                lang,
            } => match (lang, datatype) {
                (Some(lang), _) => {
                    oxrdf::Literal::new_language_tagged_literal_unchecked(lexical, lang).into()
                }
                (None, Some(dt)) => oxrdf::Literal::new_typed_literal(
                    lexical,
                    oxrdf::NamedNode::new_unchecked(dt.clone()),
                )
                .into(),
                (None, None) => oxrdf::Literal::new_simple_literal(lexical).into(),
            },
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_ox())
    }
}

/// A triple whose predicate is always an IRI.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Triple {
    pub subject: Term,
    pub predicate: String,
    pub object: Term,
}

impl Triple {
    pub fn new(subject: Term, predicate: impl Into<String>, object: Term) -> Self {
        Self {
            subject,
            predicate: predicate.into(),
            object,
        }
    }

    fn to_ox(&self) -> oxrdf::Triple {
        let subject: oxrdf::NamedOrBlankNode = match &self.subject {
            Term::Iri(iri) => oxrdf::NamedNode::new_unchecked(iri.clone()).into(),
            Term::Blank(id) => oxrdf::BlankNode::new_unchecked(id.clone()).into(),
            Term::Literal { .. } => unreachable!("literal subjects are never constructed"),
        };
        oxrdf::Triple::new(
            subject,
            oxrdf::NamedNode::new_unchecked(self.predicate.clone()),
            self.object.to_ox(),
        )
    }
}

impl fmt::Display for Triple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} <{}> {} .", self.subject, self.predicate, self.object)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RdfFormat {
    Turtle,
    NTriples,
}

impl RdfFormat {
    pub fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "ttl" => Some(RdfFormat::Turtle),
            "nt" => Some(RdfFormat::NTriples),
            _ => None,
        }
    }
}

/// One `(property, domain, range)` combination declared in a document.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct DomainRange {
    pub property: String,
    pub domain: Term,
    pub range: Term,
}

impl DomainRange {
    /// Declarations involving blank nodes are ignored by graph construction.
    pub fn involves_blank(&self) -> bool {
        self.domain.is_blank() || self.range.is_blank()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RestrictionKind {
    SomeValuesFrom,
    AllValuesFrom,
    HasValue,
    MaxCardinality,
    MinCardinality,
    Cardinality,
    OnClass,
    OnDataRange,
}

impl RestrictionKind {
    fn from_predicate(p: &str) -> Option<Self> {
        Some(match p {
            owl::SOME_VALUES_FROM => Self::SomeValuesFrom,
            owl::ALL_VALUES_FROM => Self::AllValuesFrom,
            owl::HAS_VALUE => Self::HasValue,
            owl::MAX_CARDINALITY | owl::MAX_QUALIFIED_CARDINALITY => Self::MaxCardinality,
            owl::MIN_CARDINALITY | owl::MIN_QUALIFIED_CARDINALITY => Self::MinCardinality,
            owl::CARDINALITY | owl::QUALIFIED_CARDINALITY => Self::Cardinality,
            owl::ON_CLASS => Self::OnClass,
            owl::ON_DATA_RANGE => Self::OnDataRange,
            _ => return None,
        })
    }

    pub fn is_cardinality(self) -> bool {
        matches!(
            self,
            Self::MaxCardinality | Self::MinCardinality | Self::Cardinality
        )
    }
}

/// `subject_class rdfs:subClassOf|owl:equivalentClass [ owl:onProperty property ; <kind> filler ]`
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct RestrictionLink {
    pub subject_class: String,
    pub property: String,
    pub filler: Term,
    pub kind: RestrictionKind,
    /// The blank node carrying the restriction.
    pub restriction: Term,
}

/// A parsed ontology. Immutable once built.
#[derive(Debug, Clone)]
pub struct OntologyDoc {
    id: String,
    triples: Vec<Triple>,
    by_subject: HashMap<Term, Range<usize>>,
    by_object: HashMap<Term, Vec<usize>>,
    labels: BTreeMap<String, Vec<(Option<String>, String)>>,
}

impl PartialEq for OntologyDoc {
    fn eq(&self, other: &Self) -> bool {
        self.id == other.id && self.triples == other.triples
    }
}

impl OntologyDoc {
    /// Builds a document from arbitrary triples; duplicates are dropped.
    pub fn from_triples(id: impl Into<String>, triples: impl IntoIterator<Item = Triple>) -> Self {
        let mut triples: Vec<Triple> = triples.into_iter().collect();
        triples.sort();
        triples.dedup();

        let mut by_subject: HashMap<Term, Range<usize>> = HashMap::new();
        let mut by_object: HashMap<Term, Vec<usize>> = HashMap::new();
        let mut labels: BTreeMap<String, Vec<(Option<String>, String)>> = BTreeMap::new();
        let mut start = 0;
        for i in 0..triples.len() {
            if i + 1 == triples.len() || triples[i + 1].subject != triples[i].subject {
                by_subject.insert(triples[i].subject.clone(), start..i + 1);
                start = i + 1;
            }
            let t = &triples[i];
            by_object.entry(t.object.clone()).or_default().push(i);
            if t.predicate == rdfs::LABEL {
                if let (Term::Iri(s), Term::Literal { lexical, lang, .. }) = (&t.subject, &t.object)
                {
                    labels
                        .entry(s.clone())
                        .or_default()
                        .push((lang.clone(), lexical.clone()));
                }
            }
        }
        Self {
            id: id.into(),
            triples,
            by_subject,
            by_object,
            labels,
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    /// All triples, sorted and duplicate-free.
    pub fn triples(&self) -> &[Triple] {
        &self.triples
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    pub fn contains(&self, triple: &Triple) -> bool {
        self.triples.binary_search(triple).is_ok()
    }

    /// `rdfs:label` values per IRI, as `(language tag, text)`.
    pub fn label_index(&self) -> &BTreeMap<String, Vec<(Option<String>, String)>> {
        &self.labels
    }

    /// Every triple with the given subject.
    pub fn about(&self, subject: &Term) -> &[Triple] {
        match self.by_subject.get(subject) {
            Some(r) => &self.triples[r.clone()],
            None => &[],
        }
    }

    /// Every triple with the given object.
    pub fn referencing<'a>(&'a self, object: &Term) -> impl Iterator<Item = &'a Triple> + 'a {
        self.by_object
            .get(object)
            .into_iter()
            .flatten()
            .map(move |&i| &self.triples[i])
    }

    pub fn objects<'a>(
        &'a self,
        subject: &Term,
        predicate: &'a str,
    ) -> impl Iterator<Item = &'a Term> + 'a {
        self.about(subject)
            .iter()
            .filter(move |t| t.predicate == predicate)
            .map(|t| &t.object)
    }

    pub fn subjects_with<'a>(&'a self, predicate: &'a str) -> impl Iterator<Item = &'a Term> + 'a {
        self.triples
            .iter()
            .filter(move |t| t.predicate == predicate)
            .map(|t| &t.subject)
    }

    /// Whether `entity rdf:type class` is asserted.
    pub fn has_type(&self, entity: &Term, class: &str) -> bool {
        self.objects(entity, rdf::TYPE)
            .any(|o| o.as_iri() == Some(class))
    }

    /// Labels of `entity` whose language tag matches `language` or is absent.
    ///
    /// A tag matches when it equals `language` case-insensitively or has it as
    /// primary subtag (`en-GB` matches `en`).
    pub fn labels_of(&self, entity: &str, language: &str) -> Vec<&str> {
        let Some(labels) = self.labels.get(entity) else {
            return Vec::new();
        };
        labels
            .iter()
            .filter(|(tag, _)| match tag {
                None => true,
                Some(tag) => language_matches(tag, language),
            })
            .map(|(_, text)| text.as_str())
            .collect()
    }

    /// Cartesian product of declared domains and ranges per property.
    pub fn domain_range_pairs(&self) -> Vec<DomainRange> {
        let mut out = Vec::new();
        let properties: BTreeSet<&Term> = self.subjects_with(rdfs::DOMAIN).collect();
        for p in properties {
            let Term::Iri(property) = p else { continue };
            let domains: Vec<&Term> = self.objects(p, rdfs::DOMAIN).collect();
            let ranges: Vec<&Term> = self.objects(p, rdfs::RANGE).collect();
            for d in &domains {
                for r in &ranges {
                    out.push(DomainRange {
                        property: property.clone(),
                        domain: (*d).clone(),
                        range: (*r).clone(),
                    });
                }
            }
        }
        out
    }

    /// Restrictions attached one blank-node hop below a named class.
    pub fn restriction_links(&self) -> Vec<RestrictionLink> {
        let mut out = Vec::new();
        for t in &self.triples {
            if t.predicate != rdfs::SUB_CLASS_OF && t.predicate != owl::EQUIVALENT_CLASS {
                continue;
            }
            let (Term::Iri(class), Term::Blank(_)) = (&t.subject, &t.object) else {
                continue;
            };
            let node = &t.object;
            let properties: Vec<&str> = self
                .objects(node, owl::ON_PROPERTY)
                .filter_map(Term::as_iri)
                .collect();
            for facet in self.about(node) {
                let Some(kind) = RestrictionKind::from_predicate(&facet.predicate) else {
                    continue;
                };
                for p in &properties {
                    out.push(RestrictionLink {
                        subject_class: class.clone(),
                        property: (*p).to_string(),
                        filler: facet.object.clone(),
                        kind,
                        restriction: node.clone(),
                    });
                }
            }
        }
        out.sort();
        out.dedup();
        out
    }

    /// `entity rdf:type _` triples.
    pub fn type_triples(&self, entity: &str) -> BTreeSet<Triple> {
        self.select(entity, &[rdf::TYPE], |_| true)
    }

    /// Super-properties plus equivalences in both directions.
    pub fn super_equiv_properties(&self, property: &str) -> BTreeSet<Triple> {
        let mut out = self.select(
            property,
            &[rdfs::SUB_PROPERTY_OF, owl::EQUIVALENT_PROPERTY],
            |_| true,
        );
        out.extend(self.select_incoming(property, owl::EQUIVALENT_PROPERTY));
        out
    }

    /// Super-classes and equivalent classes that are named (IRI) classes.
    pub fn super_equiv_classes(&self, class: &str) -> BTreeSet<Triple> {
        let mut out = self.select(
            class,
            &[rdfs::SUB_CLASS_OF, owl::EQUIVALENT_CLASS],
            |o| matches!(o, Term::Iri(_)),
        );
        out.extend(self.select_incoming(class, owl::EQUIVALENT_CLASS));
        out
    }

    /// `owl:inverseOf` triples in either direction.
    pub fn inverse_of(&self, property: &str) -> BTreeSet<Triple> {
        let mut out = self.select(property, &[owl::INVERSE_OF], |_| true);
        out.extend(self.select_incoming(property, owl::INVERSE_OF));
        out
    }

    fn select(
        &self,
        subject: &str,
        predicates: &[&str],
        keep: impl Fn(&Term) -> bool,
    ) -> BTreeSet<Triple> {
        self.about(&Term::iri(subject))
            .iter()
            .filter(|t| predicates.contains(&t.predicate.as_str()) && keep(&t.object))
            .cloned()
            .collect()
    }

    fn select_incoming(&self, object: &str, predicate: &str) -> BTreeSet<Triple> {
        self.referencing(&Term::iri(object))
            .filter(|t| t.predicate == predicate && matches!(t.subject, Term::Iri(_)))
            .cloned()
            .collect()
    }

    /// N-Triples serialization, one line per triple in sorted order.
    pub fn to_ntriples(&self) -> String {
        let mut out = String::new();
        for t in &self.triples {
            out.push_str(&t.to_string());
            out.push('\n');
        }
        out
    }
}

fn language_matches(tag: &str, language: &str) -> bool {
    tag.eq_ignore_ascii_case(language)
        || (tag.len() > language.len()
            && tag.as_bytes()[language.len()] == b'-'
            && tag[..language.len()].eq_ignore_ascii_case(language))
}

/// Loads an ontology, choosing the syntax from the file extension.
pub fn load_ontology(path: &Path, id: &str) -> Result<OntologyDoc, StoreError> {
    let format =
        RdfFormat::from_path(path).ok_or_else(|| StoreError::UnsupportedFormat(path.into()))?;
    load_ontology_as(path, id, format)
}

pub fn load_ontology_as(path: &Path, id: &str, format: RdfFormat) -> Result<OntologyDoc, StoreError> {
    let text = std::fs::read_to_string(path).map_err(|source| StoreError::Io {
        path: path.into(),
        source,
    })?;
    let base = std::path::absolute(path)
        .ok()
        .map(|abs| format!("file://{}", abs.display()).replace(' ', "%20"));
    parse_str(&text, id, format, base.as_deref())
}

/// Parses a document from a string. Relative IRIs resolve against `base`.
pub fn parse_str(
    text: &str,
    id: &str,
    format: RdfFormat,
    base: Option<&str>,
) -> Result<OntologyDoc, StoreError> {
    let parsed: Vec<Result<oxrdf::Triple, oxttl::TurtleSyntaxError>> = match format {
        RdfFormat::Turtle => {
            let mut parser = TurtleParser::new();
            if let Some(base) = base {
                parser = parser.clone().with_base_iri(base).unwrap_or(parser);
            }
            parser.for_slice(text).collect()
        }
        RdfFormat::NTriples => NTriplesParser::new().for_slice(text).collect(),
    };

    let mut blanks = BlankRenamer::default();
    let mut triples = Vec::with_capacity(parsed.len());
    for t in parsed {
        let t = t.map_err(|e| StoreError::Parse {
            line: e.location().start.line + 1,
            message: e.message().to_string(),
        })?;
        let subject = match t.subject {
            oxrdf::NamedOrBlankNode::NamedNode(n) => Term::Iri(n.into_string()),
            oxrdf::NamedOrBlankNode::BlankNode(b) => blanks.rename(b.as_str()),
        };
        let object = match t.object {
            oxrdf::Term::NamedNode(n) => Term::Iri(n.into_string()),
            oxrdf::Term::BlankNode(b) => blanks.rename(b.as_str()),
            oxrdf::Term::Literal(l) => {
                let lang = l.language().map(str::to_string);
                let dt = l.datatype().as_str();
                let datatype = (lang.is_none() && dt != xsd::STRING).then(|| dt.to_string());
                Term::Literal {
                    lexical: l.value().to_string(),
                    datatype,
                    lang,
                }
            }
        };
        triples.push(Triple::new(subject, t.predicate.into_string(), object));
    }
    Ok(OntologyDoc::from_triples(id, triples))
}

#[derive(Default)]
struct BlankRenamer {
    seen: HashMap<String, String>,
}

impl BlankRenamer {
    fn rename(&mut self, id: &str) -> Term {
        let next = self.seen.len();
        Term::Blank(
            self.seen
                .entry(id.to_string())
                .or_insert_with(|| format!("b{next}"))
                .clone(),
        )
    }
}

/// Writes triples as Turtle with the rdf/rdfs/owl/xsd prefixes declared.
pub fn write_turtle<'a>(triples: impl IntoIterator<Item = &'a Triple>) -> String {
    let mut serializer = TurtleSerializer::new();
    for (prefix, ns) in PREFIXES {
        serializer = serializer
            .with_prefix(prefix, ns)
            .expect("well-known namespaces are valid IRIs");
    }
    let mut writer = serializer.for_writer(Vec::new());
    for t in triples {
        writer
            .serialize_triple(&t.to_ox())
            .expect("writing to a Vec cannot fail");
    }
    String::from_utf8(writer.finish().expect("writing to a Vec cannot fail"))
        .expect("serializer emits UTF-8")
}
