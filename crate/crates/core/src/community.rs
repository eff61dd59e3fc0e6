//! Community detection by greedy modularity maximisation (Clauset-Newman-Moore)
//! followed by density-driven recursive refinement.
//!
//! Merge gains are compared in exact integer arithmetic. For communities `i`
//! and `j` joined by `E_ij` edges, with total degrees `K_i`, `K_j`, and `m`
//! edges overall,
//!
//! ```text
//! ΔQ_ij = 2 (e_ij − a_i a_j) = (2 / (2m)²) · (2m · E_ij − K_i · K_j)
//! ```
//!
//! so the integer score `2m · E_ij − K_i · K_j` has the same sign and ordering
//! as `ΔQ`, and ties are real ties rather than rounding accidents.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{IGNode, IntensionalGraph};

/// Communities below the mean density by less than this are not split.
const DENSITY_EPSILON: f64 = 1e-12;

/// Smallest community size that refinement will try to split.
pub const MIN_SPLIT_SIZE: usize = 4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CommunityError {
    #[error("graph has no edges")]
    EmptyGraph,
    #[error("node {0:?} has no community assignment")]
    Unassigned(IGNode),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    pub graph_id: String,
    pub assignment: BTreeMap<IGNode, usize>,
    pub modularity: f64,
}

impl Partition {
    pub fn community_count(&self) -> usize {
        self.assignment
            .values()
            .collect::<BTreeSet<_>>()
            .len()
    }

    /// Node sets, ordered by community index.
    pub fn groups(&self) -> Vec<BTreeSet<IGNode>> {
        let mut groups: BTreeMap<usize, BTreeSet<IGNode>> = BTreeMap::new();
        for (node, &c) in &self.assignment {
            groups.entry(c).or_default().insert(node.clone());
        }
        groups.into_values().collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Community {
    pub id: String,
    pub ontology_id: String,
    pub nodes: BTreeSet<IGNode>,
    pub internal_edges: usize,
    pub density: f64,
}

impl Community {
    pub fn new(
        id: impl Into<String>,
        graph: &IntensionalGraph,
        nodes: BTreeSet<IGNode>,
    ) -> Self {
        let internal_edges = graph
            .edges()
            .iter()
            .filter(|(a, b)| nodes.contains(a) && nodes.contains(b))
            .count();
        Self {
            id: id.into(),
            ontology_id: graph.ontology_id.clone(),
            density: density(nodes.len(), internal_edges),
            nodes,
            internal_edges,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// `2L / (n (n − 1))`, and 0 for fewer than two nodes.
pub fn density(nodes: usize, internal_edges: usize) -> f64 {
    if nodes < 2 {
        0.0
    } else {
        2.0 * internal_edges as f64 / (nodes as f64 * (nodes as f64 - 1.0))
    }
}

/// Newman modularity `Q = Σ_c (e_cc − a_c²)` of an assignment.
pub fn modularity(
    graph: &IntensionalGraph,
    assignment: &BTreeMap<IGNode, usize>,
) -> Result<f64, CommunityError> {
    if graph.edge_count() == 0 {
        return Err(CommunityError::EmptyGraph);
    }
    let (nodes, edges) = graph.indexed();
    let labels = nodes
        .iter()
        .map(|n| {
            assignment
                .get(*n)
                .copied()
                .ok_or_else(|| CommunityError::Unassigned((*n).clone()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(modularity_of_labels(&edges, &labels))
}

pub(crate) fn modularity_of_labels(edges: &[(usize, usize)], labels: &[usize]) -> f64 {
    let m = edges.len() as f64;
    let mut internal: BTreeMap<usize, f64> = BTreeMap::new();
    let mut degree: BTreeMap<usize, f64> = BTreeMap::new();
    for &(a, b) in edges {
        let (ca, cb) = (labels[a], labels[b]);
        if ca == cb {
            *internal.entry(ca).or_default() += 1.0;
        }
        *degree.entry(ca).or_default() += 1.0;
        *degree.entry(cb).or_default() += 1.0;
    }
    degree
        .iter()
        .map(|(c, k)| internal.get(c).copied().unwrap_or(0.0) / m - (k / (2.0 * m)).powi(2))
        .sum()
}

/// Greedy agglomeration over `n` nodes. Returns a label per node; labels are
/// numbered by the smallest node index of each community.
pub(crate) fn cnm_labels(n: usize, edges: &[(usize, usize)]) -> Vec<usize> {
    let two_m = 2 * edges.len() as i64;
    let mut between: Vec<BTreeMap<usize, i64>> = vec![BTreeMap::new(); n];
    let mut degree = vec![0i64; n];
    for &(a, b) in edges {
        *between[a].entry(b).or_default() += 1;
        *between[b].entry(a).or_default() += 1;
        degree[a] += 1;
        degree[b] += 1;
    }
    let mut owner: Vec<usize> = (0..n).collect();
    let mut alive = vec![true; n];

    loop {
        // Smallest (i, j) wins ties because only strictly larger scores replace.
        let mut best: Option<(i64, usize, usize)> = None;
        for i in (0..n).filter(|&i| alive[i]) {
            for (&j, &e) in between[i].range(i + 1..) {
                let score = two_m * e - degree[i] * degree[j];
                if best.is_none_or(|(s, _, _)| score > s) {
                    best = Some((score, i, j));
                }
            }
        }
        let Some((score, i, j)) = best else { break };
        if score < 0 {
            break;
        }

        let absorbed = std::mem::take(&mut between[j]);
        for (l, e) in absorbed {
            if l == i {
                continue;
            }
            between[l].remove(&j);
            *between[l].entry(i).or_default() += e;
            *between[i].entry(l).or_default() += e;
        }
        between[i].remove(&j);
        degree[i] += degree[j];
        alive[j] = false;
        for o in owner.iter_mut() {
            if *o == j {
                *o = i;
            }
        }
    }

    let mut renumber: BTreeMap<usize, usize> = BTreeMap::new();
    for &o in &owner {
        let next = renumber.len();
        renumber.entry(o).or_insert(next);
    }
    owner.iter().map(|o| renumber[o]).collect()
}

/// Clauset-Newman-Moore: start from singletons and keep merging the pair with
/// the largest modularity gain while that gain is not negative.
pub fn cnm_partition(graph: &IntensionalGraph) -> Result<Partition, CommunityError> {
    if graph.edge_count() == 0 {
        return Err(CommunityError::EmptyGraph);
    }
    let (nodes, edges) = graph.indexed();
    let labels = cnm_labels(nodes.len(), &edges);
    let modularity = modularity_of_labels(&edges, &labels);
    Ok(Partition {
        graph_id: graph.ontology_id.clone(),
        assignment: nodes
            .into_iter()
            .cloned()
            .zip(labels)
            .collect(),
        modularity,
    })
}

/// Recursively re-partitions communities whose density is below the mean
/// density of the current set, until no community splits any further.
pub fn refine(graph: &IntensionalGraph, partition: &Partition) -> Vec<Community> {
    let mut current = partition.groups();
    let mut unsplittable: BTreeSet<BTreeSet<IGNode>> = BTreeSet::new();
    loop {
        let densities: Vec<f64> = current
            .iter()
            .map(|c| Community::new("", graph, c.clone()).density)
            .collect();
        let mean = densities.iter().sum::<f64>() / densities.len().max(1) as f64;

        let mut changed = false;
        let mut next = Vec::with_capacity(current.len());
        for (group, d) in current.into_iter().zip(densities) {
            if d < mean - DENSITY_EPSILON
                && group.len() >= MIN_SPLIT_SIZE
                && !unsplittable.contains(&group)
            {
                let sub = graph.induced(&group);
                if let Ok(p) = cnm_partition(&sub) {
                    if p.community_count() >= 2 {
                        next.extend(p.groups());
                        changed = true;
                        continue;
                    }
                }
                unsplittable.insert(group.clone());
            }
            next.push(group);
        }
        current = next;
        if !changed {
            break;
        }
    }
    into_communities(graph, current)
}

fn into_communities(graph: &IntensionalGraph, mut groups: Vec<BTreeSet<IGNode>>) -> Vec<Community> {
    groups.sort_by(|a, b| a.first().cmp(&b.first()));
    groups
        .into_iter()
        .enumerate()
        .map(|(i, nodes)| Community::new(format!("c{i}"), graph, nodes))
        .collect()
}

/// CNM followed by refinement. Communities are numbered `c0, c1, …` in order
/// of their smallest node.
pub fn detect_communities(graph: &IntensionalGraph) -> Vec<Community> {
    match cnm_partition(graph) {
        Ok(p) => refine(graph, &p),
        Err(_) => into_communities(
            graph,
            graph.nodes().iter().map(|n| [n.clone()].into()).collect(),
        ),
    }
}


#[cfg(test)]
mod tests {
    use super::oracle::*;
    use super::*;
    use proptest::prelude::*;

    fn node(i: usize) -> IGNode {
        IGNode::entity(format!("n{i:02}"))
    }

    fn graph_of(edges: &[(usize, usize)]) -> IntensionalGraph {
        IntensionalGraph::from_edges("g", edges.iter().map(|&(a, b)| (node(a), node(b))))
    }

    fn clique(nodes: &[usize]) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (i, &a) in nodes.iter().enumerate() {
            for &b in &nodes[i + 1..] {
                out.push((a, b));
            }
        }
        out
    }

    fn two_cliques_bridge() -> Vec<(usize, usize)> {
        let mut e = clique(&[0, 1, 2, 3]);
        e.extend(clique(&[4, 5, 6, 7]));
        e.push((3, 4));
        e
    }

    #[test]
    fn one_community_has_zero_modularity() {
        let g = graph_of(&two_cliques_bridge());
        let all = g.nodes().iter().map(|n| (n.clone(), 0)).collect();
        assert!(modularity(&g, &all).unwrap().abs() < 1e-15);
    }

    #[test]
    fn singletons_have_negative_modularity() {
        let edges = two_cliques_bridge();
        let g = graph_of(&edges);
        let singles: BTreeMap<_, _> = g.nodes().iter().cloned().enumerate().map(|(i, n)| (n, i)).collect();
        let q = modularity(&g, &singles).unwrap();
        // k = 3 for six nodes, 4 for the two bridge ends, 2m = 26.
        let expected = -(6.0 * 9.0 + 2.0 * 16.0) / (26.0f64 * 26.0);
        assert!((q - expected).abs() < 1e-12, "{q} vs {expected}");
    }

    #[test]
    fn empty_graph_is_an_error() {
        let g = IntensionalGraph::new("e");
        assert_eq!(modularity(&g, &BTreeMap::new()), Err(CommunityError::EmptyGraph));
        assert_eq!(cnm_partition(&g), Err(CommunityError::EmptyGraph));
        assert!(detect_communities(&g).is_empty());
    }

    #[test]
    fn missing_assignment_is_reported() {
        let g = graph_of(&[(0, 1)]);
        let partial = [(node(0), 0)].into();
        assert_eq!(
            modularity(&g, &partial),
            Err(CommunityError::Unassigned(node(1)))
        );
    }

    #[test]
    fn two_cliques_with_bridge() {
        let edges = two_cliques_bridge();
        let (best_q, best_labels) = best_partition(8, &edges);
        // Frozen from the exhaustive oracle: the two cliques, Q = 11/26.
        assert!((best_q - 11.0 / 26.0).abs() < 1e-12);
        assert_eq!(best_labels, vec![0, 0, 0, 0, 1, 1, 1, 1]);

        let p = cnm_partition(&graph_of(&edges)).unwrap();
        assert!((p.modularity - best_q).abs() < 1e-12);
        let groups = p.groups();
        assert_eq!(groups.len(), 2);
        assert_eq!(groups[0], (0..4).map(node).collect());
        assert_eq!(groups[1], (4..8).map(node).collect());
    }

    #[test]
    fn single_edge_merges() {
        let p = cnm_partition(&graph_of(&[(0, 1)])).unwrap();
        assert_eq!(p.community_count(), 1);
        assert_eq!(p.modularity, 0.0);
        // Singletons: Q = -2 · (1/2)² = -1/2, so the merge gains exactly 1/2.
        assert_eq!(modularity_of_labels(&[(0, 1)], &[0, 1]), -0.5);
    }

    #[test]
    fn path_of_five_splits_in_two() {
        // TOY1's graph is the path Agent -- ctx -- Event -- ctx -- TimeSpan.
        let edges = [(0, 1), (1, 2), (2, 3), (3, 4)];
        let (best_q, _) = best_partition(5, &edges);
        assert!((best_q - 7.0 / 32.0).abs() < 1e-12);
        let p = cnm_partition(&graph_of(&edges)).unwrap();
        assert_eq!(p.community_count(), 2);
        assert!((p.modularity - best_q).abs() < 1e-12);
    }

    #[test]
    fn greedy_gap_on_six_path() {
        // Greedy merging pairs up the path instead of halving it.
        let edges = [(0, 1), (0, 2), (1, 4), (2, 5), (3, 4)];
        let (best_q, _) = best_partition(6, &edges);
        assert!((best_q - 0.3).abs() < 1e-12);
        let q = q_matrix(6, &edges, &cnm_labels(6, &edges));
        assert!((q - 0.26).abs() < 1e-12);
    }

    #[test]
    fn disconnected_cliques() {
        let mut edges = clique(&[0, 1, 2, 3]);
        edges.extend(clique(&[4, 5, 6, 7]));
        let (best_q, _) = best_partition(8, &edges);
        let communities = detect_communities(&graph_of(&edges));
        assert_eq!(communities.len(), 2);
        let p = cnm_partition(&graph_of(&edges)).unwrap();
        assert!((p.modularity - best_q).abs() < 1e-12);
        assert!((best_q - 0.5).abs() < 1e-12);
    }

    #[test]
    fn equal_density_is_a_fixpoint() {
        let mut edges = clique(&[0, 1, 2, 3]);
        edges.extend(clique(&[4, 5, 6, 7]));
        let g = graph_of(&edges);
        let p = cnm_partition(&g).unwrap();
        let refined = refine(&g, &p);
        assert_eq!(refined.len(), 2);
        assert!(refined.iter().all(|c| c.density == 1.0));
    }

    #[test]
    fn small_sparse_communities_are_kept() {
        // A 3-path next to a K4: the path is below the mean density but too
        // small to split.
        let mut edges = vec![(0, 1), (1, 2)];
        edges.extend(clique(&[3, 4, 5, 6]));
        let g = graph_of(&edges);
        let assignment: BTreeMap<IGNode, usize> =
            (0..7).map(|i| (node(i), usize::from(i >= 3))).collect();
        let p = Partition {
            graph_id: "g".into(),
            modularity: modularity(&g, &assignment).unwrap(),
            assignment,
        };
        let refined = refine(&g, &p);
        assert_eq!(refined.len(), 2);
        assert_eq!(refined[0].len(), 3);
        assert!(refined[0].density < refined[1].density);
    }

    #[test]
    fn density_formula() {
        assert_eq!(density(1, 0), 0.0);
        assert_eq!(density(2, 1), 1.0);
        assert!((density(4, 3) - 0.5).abs() < 1e-15);
    }

    fn arb_graph(max_nodes: usize) -> impl Strategy<Value = (usize, Vec<(usize, usize)>)> {
        (2..=max_nodes).prop_flat_map(|n| {
            let pairs: Vec<(usize, usize)> = (0..n)
                .flat_map(|a| (a + 1..n).map(move |b| (a, b)))
                .collect();
            let len = pairs.len();
            (Just(n), proptest::sample::subsequence(pairs, 1..=len))
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn cnm_is_bounded_by_optimum((n, edges) in arb_graph(8)) {
            let labels = cnm_labels(n, &edges);
            let q = q_matrix(n, &edges, &labels);
            let (best, _) = best_partition(n, &edges);
            prop_assert!(q <= best + 1e-12);
            // Never worse than the trivial partitions.
            prop_assert!(q >= -1e-12);
            let singles: Vec<usize> = (0..n).collect();
            prop_assert!(q >= q_matrix(n, &edges, &singles) - 1e-12);
        }

        #[test]
        fn detection_covers_every_node_once((n, edges) in arb_graph(9)) {
            let g = graph_of(&edges);
            let communities = detect_communities(&g);
            let mut seen = BTreeSet::new();
            for c in &communities {
                for node in &c.nodes {
                    prop_assert!(seen.insert(node.clone()));
                }
            }
            prop_assert_eq!(&seen, g.nodes());
            prop_assert!(n >= seen.len());
        }

        #[test]
        fn detection_ignores_edge_order((_n, edges) in arb_graph(9), seed in any::<u64>()) {
            let mut shuffled = edges.clone();
            let len = shuffled.len();
            for i in 0..len {
                let j = (seed.wrapping_mul(i as u64 + 1) % len as u64) as usize;
                shuffled.swap(i, j);
            }
            let flipped: Vec<(usize, usize)> = shuffled.iter().map(|&(a, b)| (b, a)).collect();
            prop_assert_eq!(
                detect_communities(&graph_of(&edges)),
                detect_communities(&graph_of(&flipped))
            );
        }

        #[test]
        fn modularity_matches_matrix_form((n, edges) in arb_graph(9), labels in proptest::collection::vec(0usize..4, 9)) {
            let labels = &labels[..n];
            let direct = modularity_of_labels(&edges, labels);
            prop_assert!((direct - q_matrix(n, &edges, labels)).abs() < 1e-12);
            prop_assert!((-0.5..1.0).contains(&direct));
        }
    }
}
