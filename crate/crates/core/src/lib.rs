//! Extraction of conceptual components from a corpus of OWL/RDF ontologies.
//!
//! Each ontology is turned into an undirected intensional graph
//! ([`graph`]), partitioned into communities by greedy modularity
//! optimisation ([`community`]), and every community yields an RDF fragment
//! ([`fragments`]) and a bag of label terms ([`virtualdoc`]). The terms are
//! disambiguated into synsets and frames ([`grounding`]), the grounded
//! documents are clustered across the corpus ([`clustering`]), and the
//! clusters become named components linked by frame inheritance
//! ([`catalogue`]). [`pipeline`] runs the whole chain over a directory.

pub mod catalogue;
pub mod clustering;
pub mod community;
pub mod fragments;
pub mod graph;
pub mod grounding;
pub mod pipeline;
pub mod store;
pub mod virtualdoc;
pub mod vocab;
