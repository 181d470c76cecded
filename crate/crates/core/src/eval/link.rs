//! Link prediction: hide a fraction of edges, train on the rest, classify
//! hidden edges against an equal number of non-edges.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::logistic::{train_logistic, Standardizer};
use super::BinaryMetrics;
use crate::error::{Error, Result};
use crate::graph::{edge_key, Graph};
use crate::params::EmbeddingTable;

/// Logistic-regression settings used on standardized edge features.
pub const CLASSIFIER_EPOCHS: usize = 300;
pub const CLASSIFIER_LR: f64 = 0.5;
/// Upper bound on calibration edges fed to the classifier.
pub const MAX_CALIBRATION_EDGES: usize = 50_000;

#[derive(Debug, Clone)]
pub struct LinkSplit {
    pub train_graph: Graph,
    pub test_positives: Vec<(usize, usize)>,
    pub test_negatives: Vec<(usize, usize)>,
}

impl LinkSplit {
    /// Hidden edges must be absent from the training graph and negatives
    /// must not be training edges.
    pub fn check_disjoint(&self) -> Result<()> {
        for &(u, v) in &self.test_positives {
            if self.train_graph.has_edge(u, v) {
                return Err(Error::Data(format!("test edge {u}-{v} is in the training graph")));
            }
        }
        for &(u, v) in &self.test_negatives {
            if self.train_graph.has_edge(u, v) {
                return Err(Error::Data(format!("negative pair {u}-{v} is a training edge")));
            }
        }
        Ok(())
    }
}

/// `⌊x + 0.5⌋`.
pub fn round_half_up(x: f64) -> usize {
    (x + 0.5).floor() as usize
}

/// Draws `count` distinct unordered pairs `u != v` for which `allowed`
/// holds. `available` is the exact number of allowed pairs.
pub(crate) fn sample_pairs<F>(
    n: usize,
    count: usize,
    available: usize,
    rng: &mut impl Rng,
    allowed: F,
) -> Result<Vec<(usize, usize)>>
where
    F: Fn(usize, usize) -> bool,
{
    if available < count {
        return Err(Error::TooDense {
            needed: count,
            available,
        });
    }
    let total = n * (n - 1) / 2;
    // Rejection sampling is fine unless almost every pair is excluded.
    if available * 20 >= total {
        let mut chosen = HashSet::with_capacity(count);
        let mut out = Vec::with_capacity(count);
        while out.len() < count {
            let u = rng.gen_range(0..n);
            let v = rng.gen_range(0..n);
            if u == v {
                continue;
            }
            let key = edge_key(u, v);
            if allowed(key.0, key.1) && chosen.insert(key) {
                out.push(key);
            }
        }
        Ok(out)
    } else {
        let mut all: Vec<(usize, usize)> = (0..n)
            .flat_map(|u| (u + 1..n).map(move |v| (u, v)))
            .filter(|&(u, v)| allowed(u, v))
            .collect();
        all.shuffle(rng);
        all.truncate(count);
        Ok(all)
    }
}

/// Hides `round_half_up(E · fraction)` uniformly chosen edges (at least
/// one) and draws as many non-edges of the original graph.
pub fn split_edges(graph: &Graph, holdout_fraction: f64, seed: u64) -> Result<LinkSplit> {
    if !(holdout_fraction > 0.0 && holdout_fraction < 1.0) {
        return Err(Error::Config(format!(
            "holdout fraction {holdout_fraction} is not in (0, 1)"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges: Vec<(usize, usize)> = graph.edges().collect();
    let hidden = round_half_up(edges.len() as f64 * holdout_fraction).max(1);
    if hidden >= edges.len() {
        return Err(Error::Config(format!(
            "holding out {hidden} of {} edges leaves nothing to train on",
            edges.len()
        )));
    }
    edges.shuffle(&mut rng);
    let mut test_positives = edges[..hidden].to_vec();
    test_positives.sort_unstable();
    let removed: HashSet<_> = test_positives.iter().copied().collect();
    let train_graph = graph.without_edges(&removed);

    let n = graph.vertex_count();
    let available = n * (n - 1) / 2 - graph.edge_count();
    let test_negatives = sample_pairs(n, hidden, available, &mut rng, |u, v| !graph.has_edge(u, v))?;

    Ok(LinkSplit {
        train_graph,
        test_positives,
        test_negatives,
    })
}

/// Element-wise product of two embeddings.
pub fn hadamard(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x * y).collect()
}

/// Trains a logistic model on Hadamard features of training edges versus
/// sampled non-edges (never a test pair), then scores the test set at
/// threshold 0.5.
pub fn link_prediction_eval(
    embeddings: &EmbeddingTable,
    split: &LinkSplit,
    seed: u64,
) -> Result<BinaryMetrics> {
    let graph = &split.train_graph;
    if embeddings.rows() != graph.vertex_count() {
        return Err(Error::DimensionMismatch {
            expected: graph.vertex_count(),
            found: embeddings.rows(),
        });
    }
    split.check_disjoint()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut calibration: Vec<(usize, usize)> = graph.edges().collect();
    if calibration.len() > MAX_CALIBRATION_EDGES {
        calibration.shuffle(&mut rng);
        calibration.truncate(MAX_CALIBRATION_EDGES);
        calibration.sort_unstable();
    }
    let test_pairs: HashSet<(usize, usize)> = split
        .test_positives
        .iter()
        .chain(&split.test_negatives)
        .map(|&(u, v)| edge_key(u, v))
        .collect();
    let n = graph.vertex_count();
    let available = (n * (n - 1) / 2)
        .saturating_sub(graph.edge_count())
        .saturating_sub(test_pairs.len());
    let negatives = sample_pairs(n, calibration.len(), available, &mut rng, |u, v| {
        !graph.has_edge(u, v) && !test_pairs.contains(&(u, v))
    })?;

    let feature = |&(u, v): &(usize, usize)| hadamard(embeddings.row(u), embeddings.row(v));
    let mut features: Vec<Vec<f64>> = calibration.iter().chain(&negatives).map(feature).collect();
    let labels: Vec<bool> = (0..features.len()).map(|i| i < calibration.len()).collect();
    let scaler = Standardizer::fit(&features);
    for f in &mut features {
        *f = scaler.transform(f);
    }
    let model = train_logistic(&features, &labels, CLASSIFIER_EPOCHS, CLASSIFIER_LR)?;

    let predicted: Vec<bool> = split
        .test_positives
        .iter()
        .chain(&split.test_negatives)
        .map(|p| model.predict(&scaler.transform(&feature(p))))
        .collect();
    let truth: Vec<bool> = (0..predicted.len())
        .map(|i| i < split.test_positives.len())
        .collect();
    Ok(BinaryMetrics::from_predictions(&truth, &predicted))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ten_edges() -> Graph {
        Graph::from_edges(
            8,
            [(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 6), (6, 7), (7, 0), (0, 4), (2, 6)],
        )
        .unwrap()
    }

    #[test]
    fn ten_edges_hide_one() {
        let s = split_edges(&ten_edges(), 0.1, 3).unwrap();
        assert_eq!(s.test_positives.len(), 1);
        assert_eq!(s.test_negatives.len(), 1);
        assert_eq!(s.train_graph.edge_count(), 9);
        s.check_disjoint().unwrap();
    }

    #[test]
    fn hidden_edges_leave_train_graph() {
        let g = ten_edges();
        for seed in 0..20 {
            let s = split_edges(&g, 0.3, seed).unwrap();
            assert_eq!(s.test_positives.len(), 3);
            for &(u, v) in &s.test_positives {
                assert!(g.has_edge(u, v));
                assert!(!s.train_graph.has_edge(u, v));
            }
            for &(u, v) in &s.test_negatives {
                assert!(!g.has_edge(u, v) && u != v);
            }
        }
    }

    #[test]
    fn rounding_is_half_up() {
        assert_eq!(round_half_up(14496.0 * 0.1), 1450);
        assert_eq!(round_half_up(2.5), 3);
        assert_eq!(round_half_up(2.49), 2);
    }

    #[test]
    fn dense_graph_errors() {
        let k4 = Graph::from_edges(4, [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]).unwrap();
        assert!(matches!(split_edges(&k4, 0.5, 0), Err(Error::TooDense { .. })));
        assert!(split_edges(&k4, 1.0, 0).is_err());
    }

    #[test]
    fn nearly_complete_graph_uses_enumeration() {
        let n = 30;
        let mut edges = vec![];
        for u in 0..n {
            for v in u + 1..n {
                if (u + v) % 17 != 0 {
                    edges.push((u, v));
                }
            }
        }
        let g = Graph::from_edges(n, edges).unwrap();
        let missing = n * (n - 1) / 2 - g.edge_count();
        let s = split_edges(&g, missing as f64 / g.edge_count() as f64 * 0.9, 1).unwrap();
        for &(u, v) in &s.test_negatives {
            assert!(!g.has_edge(u, v));
        }
        let unique: HashSet<_> = s.test_negatives.iter().collect();
        assert_eq!(unique.len(), s.test_negatives.len());
    }
}
