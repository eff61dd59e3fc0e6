//! Vectorisation of grounded documents and K-Means clustering with elbow
//! selection of the cluster count.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grounding::GroundedDocument;

pub const MAX_LLOYD_ITERATIONS: usize = 300;
pub const RESTARTS: u64 = 5;
pub const DEFAULT_K_MAX: usize = 30;

#[derive(Debug, Error, PartialEq)]
pub enum ClusteringError {
    #[error("k = {k} is outside 1..={n}")]
    InvalidK { k: usize, n: usize },
    #[error("elbow selection needs at least 3 curve points, got {0}")]
    CurveTooShort(usize),
    #[error("clustering needs at least 3 non-empty documents, got {0}")]
    TooFewDocuments(usize),
    #[error("vectors have inconsistent dimensions")]
    RaggedInput,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", content = "id", rename_all = "lowercase")]
pub enum Dimension {
    Synset(String),
    Frame(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DocVector {
    /// `ontologyId/communityId`.
    pub key: String,
    pub vector: Vec<f64>,
    /// True for documents without synsets or frames (zero vector).
    pub empty: bool,
}

/// Synset dimensions (sorted) followed by frame dimensions (sorted).
pub fn vocabulary(docs: &[GroundedDocument]) -> Vec<Dimension> {
    let synsets: BTreeSet<&str> = docs.iter().flat_map(|d| d.synsets.keys()).collect();
    let frames: BTreeSet<&str> = docs.iter().flat_map(|d| d.frames.keys()).collect();
    synsets
        .into_iter()
        .map(|s| Dimension::Synset(s.to_string()))
        .chain(frames.into_iter().map(|f| Dimension::Frame(f.to_string())))
        .collect()
}

/// L2-normalised count vectors over [`vocabulary`].
pub fn vectorize(docs: &[GroundedDocument]) -> (Vec<Dimension>, Vec<DocVector>) {
    let vocab = vocabulary(docs);
    let vectors = docs
        .iter()
        .map(|d| {
            let mut v: Vec<f64> = vocab
                .iter()
                .map(|dim| match dim {
                    Dimension::Synset(s) => d.synsets.count(s) as f64,
                    Dimension::Frame(f) => d.frames.count(f) as f64,
                })
                .collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 0.0 {
                v.iter_mut().for_each(|x| *x /= norm);
            }
            DocVector {
                key: d.key(),
                vector: v,
                empty: norm == 0.0,
            }
        })
        .collect();
    (vocab, vectors)
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansFit {
    pub assignment: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
    pub wcss: f64,
    pub iterations: usize,
    /// WCSS after each centroid update.
    pub trace: Vec<f64>,
}

pub fn wcss(points: &[Vec<f64>], assignment: &[usize], centroids: &[Vec<f64>]) -> f64 {
    points
        .iter()
        .zip(assignment)
        .map(|(p, &c)| sq_dist(p, &centroids[c]))
        .sum()
}

fn means(points: &[Vec<f64>], assignment: &[usize], k: usize) -> Vec<Vec<f64>> {
    let dim = points[0].len();
    let mut sums = vec![vec![0.0; dim]; k];
    let mut counts = vec![0usize; k];
    for (p, &c) in points.iter().zip(assignment) {
        counts[c] += 1;
        for (s, x) in sums[c].iter_mut().zip(p) {
            *s += x;
        }
    }
    for (s, &n) in sums.iter_mut().zip(&counts) {
        if n > 0 {
            s.iter_mut().for_each(|x| *x /= n as f64);
        }
    }
    sums
}

/// Points with their non-zero coordinates and squared norms, so distances to
/// dense centroids cost O(non-zeros) via `|x|² + |c|² − 2 x·c`.
struct Points<'a> {
    dense: &'a [Vec<f64>],
    nonzero: Vec<Vec<usize>>,
    norm2: Vec<f64>,
}

impl<'a> Points<'a> {
    fn new(dense: &'a [Vec<f64>]) -> Self {
        Self {
            nonzero: dense
                .iter()
                .map(|p| (0..p.len()).filter(|&i| p[i] != 0.0).collect())
                .collect(),
            norm2: dense.iter().map(|p| p.iter().map(|x| x * x).sum()).collect(),
            dense,
        }
    }

    fn len(&self) -> usize {
        self.dense.len()
    }

    fn dist(&self, i: usize, centroid: &[f64], centroid_norm2: f64) -> f64 {
        let p = &self.dense[i];
        let dot: f64 = self.nonzero[i].iter().map(|&j| p[j] * centroid[j]).sum();
        (self.norm2[i] + centroid_norm2 - 2.0 * dot).max(0.0)
    }

    /// Nearest centroid, ties to the lowest index.
    fn nearest(&self, i: usize, centroids: &[Vec<f64>], norms: &[f64]) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (c, (centroid, &norm)) in centroids.iter().zip(norms).enumerate() {
            let d = self.dist(i, centroid, norm);
            if d < best_d {
                best = c;
                best_d = d;
            }
        }
        best
    }

    fn assign(&self, centroids: &[Vec<f64>]) -> Vec<usize> {
        let norms = norms(centroids);
        (0..self.len()).map(|i| self.nearest(i, centroids, &norms)).collect()
    }
}

fn norms(vectors: &[Vec<f64>]) -> Vec<f64> {
    vectors.iter().map(|c| c.iter().map(|x| x * x).sum()).collect()
}

fn farthest_point_init(points: &Points, k: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let first = rng.gen_range(0..points.len());
    let mut chosen = vec![first];
    let mut min_d: Vec<f64> = (0..points.len())
        .map(|i| points.dist(i, &points.dense[first], points.norm2[first]))
        .collect();
    while chosen.len() < k {
        let mut next = None;
        let mut best = -1.0;
        for (i, &d) in min_d.iter().enumerate() {
            if !chosen.contains(&i) && d > best {
                next = Some(i);
                best = d;
            }
        }
        let next = next.expect("k <= n");
        chosen.push(next);
        for (i, m) in min_d.iter_mut().enumerate() {
            *m = m.min(points.dist(i, &points.dense[next], points.norm2[next]));
        }
    }
    chosen.into_iter().map(|i| points.dense[i].clone()).collect()
}

/// Moves, into each empty cluster, the point farthest from its centroid
/// among clusters that can spare one.
fn repair_empty(points: &Points, assignment: &mut [usize], centroids: &mut [Vec<f64>]) {
    let k = centroids.len();
    loop {
        let mut sizes = vec![0usize; k];
        for &c in assignment.iter() {
            sizes[c] += 1;
        }
        let Some(empty) = sizes.iter().position(|&s| s == 0) else {
            return;
        };
        let norms = norms(centroids);
        let mut donor = None;
        let mut best = -1.0;
        for (i, &c) in assignment.iter().enumerate() {
            let d = points.dist(i, &centroids[c], norms[c]);
            if sizes[c] > 1 && d > best {
                donor = Some(i);
                best = d;
            }
        }
        let donor = donor.expect("k <= n leaves a cluster with two points");
        assignment[donor] = empty;
        centroids[empty] = points.dense[donor].clone();
    }
}

/// Lloyd's algorithm from farthest-point seeding.
pub fn kmeans(points: &[Vec<f64>], k: usize, seed: u64) -> Result<KMeansFit, ClusteringError> {
    let n = points.len();
    if k == 0 || k > n {
        return Err(ClusteringError::InvalidK { k, n });
    }
    if points.iter().any(|p| p.len() != points[0].len()) {
        return Err(ClusteringError::RaggedInput);
    }
    let data = Points::new(points);
    let mut centroids = farthest_point_init(&data, k, seed);
    let mut assignment = data.assign(&centroids);
    repair_empty(&data, &mut assignment, &mut centroids);

    let mut trace: Vec<f64> = Vec::new();
    let mut iterations = 0;
    while iterations < MAX_LLOYD_ITERATIONS {
        iterations += 1;
        centroids = means(points, &assignment, k);
        let current = wcss(points, &assignment, &centroids);
        if let Some(&prev) = trace.last() {
            debug_assert!(current <= prev + 1e-9 * prev.max(1.0), "WCSS rose: {prev} -> {current}");
        }
        trace.push(current);
        let mut next = data.assign(&centroids);
        repair_empty(&data, &mut next, &mut centroids);
        if next == assignment {
            break;
        }
        assignment = next;
    }
    let centroids = means(points, &assignment, k);
    let wcss = wcss(points, &assignment, &centroids);
    Ok(KMeansFit {
        assignment,
        centroids,
        wcss,
        iterations,
        trace,
    })
}

/// Best of [`RESTARTS`] runs seeded `seed, seed+1, …`; ties keep the earliest.
pub fn kmeans_restarts(points: &[Vec<f64>], k: usize, seed: u64) -> Result<KMeansFit, ClusteringError> {
    let mut best: Option<KMeansFit> = None;
    for r in 0..RESTARTS {
        let fit = kmeans(points, k, seed.wrapping_add(r))?;
        if best.as_ref().is_none_or(|b| fit.wcss < b.wcss) {
            best = Some(fit);
        }
    }
    Ok(best.expect("at least one restart"))
}

/// Interior point of maximal second difference `W(k-1) - 2W(k) + W(k+1)`.
/// `curve[i]` is the WCSS for `k = i + 1`. Differences within a relative
/// 1e-9 of the best count as ties, which go to the smallest k.
pub fn elbow_select(curve: &[f64]) -> Result<usize, ClusteringError> {
    if curve.len() < 3 {
        return Err(ClusteringError::CurveTooShort(curve.len()));
    }
    let scale = curve.iter().fold(1.0f64, |m, w| m.max(w.abs()));
    let eps = 1e-9 * scale;
    let mut best_k = 2;
    let mut best = f64::NEG_INFINITY;
    for i in 1..curve.len() - 1 {
        let sd = curve[i - 1] - 2.0 * curve[i] + curve[i + 1];
        if sd > best + eps {
            best = sd;
            best_k = i + 1;
        }
    }
    Ok(best_k)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ClusteringResult {
    pub k: usize,
    /// `ontologyId/communityId` → cluster index.
    pub assignment: BTreeMap<String, usize>,
    pub centroids: Vec<Vec<f64>>,
    /// k' → best WCSS over restarts.
    pub wcss_curve: BTreeMap<usize, f64>,
    pub vocabulary: Vec<Dimension>,
    /// Keys of documents left out for having no synsets or frames.
    pub excluded: Vec<String>,
}

impl ClusteringResult {
    pub fn members(&self, cluster: usize) -> impl Iterator<Item = &str> {
        self.assignment
            .iter()
            .filter(move |(_, &c)| c == cluster)
            .map(|(k, _)| k.as_str())
    }

    /// `k,wcss` lines for plotting the elbow curve.
    pub fn wcss_csv(&self) -> String {
        let mut out = String::from("k,wcss\n");
        for (k, w) in &self.wcss_curve {
            out.push_str(&format!("{k},{w}\n"));
        }
        out
    }
}

/// Renumbers clusters by the first document that falls into each.
fn canonical_labels(fit: &KMeansFit) -> (Vec<usize>, Vec<Vec<f64>>) {
    let mut relabel: BTreeMap<usize, usize> = BTreeMap::new();
    for &c in &fit.assignment {
        let next = relabel.len();
        relabel.entry(c).or_insert(next);
    }
    let assignment = fit.assignment.iter().map(|c| relabel[c]).collect();
    let mut centroids = vec![Vec::new(); fit.centroids.len()];
    for (old, new) in relabel {
        centroids[new] = fit.centroids[old].clone();
    }
    (assignment, centroids)
}

/// Clusters the non-empty documents for every k' in `1..=min(k_max, n-1)` and
/// keeps the elbow. `k_max` defaults to `min(30, n-1)`. A two-point curve
/// (three documents) takes k=2 only when it strictly lowers WCSS.
pub fn cluster_corpus(
    docs: &[GroundedDocument],
    k_max: Option<usize>,
    seed: u64,
) -> Result<ClusteringResult, ClusteringError> {
    let (vocab, vectors) = vectorize(docs);
    let (kept, excluded): (Vec<DocVector>, Vec<DocVector>) = vectors.into_iter().partition(|v| !v.empty);
    let n = kept.len();
    if n < 3 {
        return Err(ClusteringError::TooFewDocuments(n));
    }
    let top = k_max.unwrap_or(DEFAULT_K_MAX).clamp(1, n - 1);
    let points: Vec<Vec<f64>> = kept.iter().map(|v| v.vector.clone()).collect();

    let fits = (1..=top)
        .into_par_iter()
        .map(|k| kmeans_restarts(&points, k, seed))
        .collect::<Result<Vec<_>, _>>()?;
    let curve: Vec<f64> = fits.iter().map(|f| f.wcss).collect();
    let k = match curve.len() {
        1 => 1,
        2 if curve[1] < curve[0] => 2,
        2 => 1,
        _ => elbow_select(&curve)?,
    };
    let (assignment, centroids) = canonical_labels(&fits[k - 1]);

    Ok(ClusteringResult {
        k,
        assignment: kept.iter().map(|v| v.key.clone()).zip(assignment).collect(),
        centroids,
        wcss_curve: (1..=top).zip(curve).collect(),
        vocabulary: vocab,
        excluded: excluded.into_iter().map(|v| v.key).collect(),
    })
}

/// Every non-empty document in one cluster, for corpora too small to cluster.
pub fn single_cluster(docs: &[GroundedDocument]) -> ClusteringResult {
    let (vocab, vectors) = vectorize(docs);
    let (kept, excluded): (Vec<DocVector>, Vec<DocVector>) = vectors.into_iter().partition(|v| !v.empty);
    let points: Vec<Vec<f64>> = kept.iter().map(|v| v.vector.clone()).collect();
    let (centroids, wcss_curve) = if points.is_empty() {
        (Vec::new(), BTreeMap::new())
    } else {
        let assignment = vec![0; points.len()];
        let centroids = means(&points, &assignment, 1);
        let w = wcss(&points, &assignment, &centroids);
        (centroids, [(1, w)].into())
    };
    ClusteringResult {
        k: usize::from(!kept.is_empty()),
        assignment: kept.iter().map(|v| (v.key.clone(), 0)).collect(),
        centroids,
        wcss_curve,
        vocabulary: vocab,
        excluded: excluded.into_iter().map(|v| v.key).collect(),
    }
}

#[cfg(test)]
pub(crate) mod fixtures {
    use crate::grounding::{Bag, GroundedDocument};

    pub fn doc(ontology: &str, community: &str, synsets: &[(&str, usize)], frames: &[(&str, usize)]) -> GroundedDocument {
        let bag = |items: &[(&str, usize)]| {
            let mut b = Bag::new();
            for (k, n) in items {
                b.add(*k, *n);
            }
            b
        };
        GroundedDocument {
            community_id: community.into(),
            ontology_id: ontology.into(),
            terms: Vec::new(),
            synsets: bag(synsets),
            frames: bag(frames),
        }
    }

    /// 15 documents in three blobs over disjoint synset/frame vocabularies,
    /// interleaved so blob membership is not positional. Returns documents
    /// and the blob of each.
    pub fn three_blobs() -> (Vec<GroundedDocument>, Vec<usize>) {
        let blobs = [
            (["a1", "a2", "a3"], "FA"),
            (["b1", "b2", "b3"], "FB"),
            (["c1", "c2", "c3"], "FC"),
        ];
        let mut docs = Vec::new();
        let mut truth = Vec::new();
        for i in 0..15 {
            let blob = (i * 2) % 3;
            let (syn, frame) = blobs[blob];
            let w = i % 5;
            docs.push(doc(
                &format!("o{}", i % 4),
                &format!("c{i}"),
                &[(syn[0], 2 + w % 2), (syn[1], 1 + w % 3), (syn[2], 1)],
                &[(frame, 2)],
            ));
            truth.push(blob);
        }
        (docs, truth)
    }
}
