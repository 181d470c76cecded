//! How edge existence decays with shortest distance.
//!
//! Pairs are sampled uniformly; an existing edge between the pair is
//! removed before measuring their distance, so every pair lands at
//! distance ≥ 2 or is disconnected.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{linear_fit, LinearFit};
use crate::error::{Error, Result};
use crate::graph::Graph;

/// Buckets with fewer sampled pairs are left out of the fit.
pub const MIN_BUCKET_PAIRS: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceBucket {
    pub distance: usize,
    pub pairs: usize,
    pub edges: usize,
    pub edge_probability: f64,
    /// `ln(edge_probability)`, `-inf` when no edge was seen.
    pub log_probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceStudy {
    pub buckets: Vec<DistanceBucket>,
    /// Line through `(distance, ln P)` over buckets with at least one edge
    /// and `min_bucket_pairs` pairs; `None` when fewer than two qualify.
    pub fit: Option<LinearFit>,
    pub sampled_pairs: usize,
    pub disconnected_pairs: usize,
}

pub const BUCKET_HEADER: &str = "distance,pairs,edges,edge_probability,log_probability";

impl DistanceBucket {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{}",
            self.distance, self.pairs, self.edges, self.edge_probability, self.log_probability
        )
    }
}

/// Buckets for an explicit list of pairs.
pub fn distance_table(
    graph: &Graph,
    pairs: &[(usize, usize)],
    min_bucket_pairs: usize,
) -> Result<DistanceStudy> {
    for &(u, v) in pairs {
        graph.check_vertex(u)?;
        graph.check_vertex(v)?;
        if u == v {
            return Err(Error::Data(format!("pair ({u}, {v}) is a self-pair")));
        }
    }
    // one BFS per distinct source for non-edge pairs
    let mut by_source: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for &(u, v) in pairs {
        by_source.entry(u).or_default().push(v);
    }
    let groups: Vec<(usize, Vec<usize>)> = by_source.into_iter().collect();
    let observations: Vec<Vec<(Option<u32>, bool)>> = groups
        .par_iter()
        .map(|(u, targets)| {
            let plain = graph.distances_from(*u);
            targets
                .iter()
                .map(|&v| {
                    if graph.has_edge(*u, v) {
                        (graph.distances_avoiding(*u, Some((*u, v)))[v], true)
                    } else {
                        (plain[v], false)
                    }
                })
                .collect()
        })
        .collect();

    let mut counts: BTreeMap<usize, (usize, usize)> = BTreeMap::new();
    let mut disconnected = 0;
    for (distance, had_edge) in observations.into_iter().flatten() {
        match distance {
            Some(d) => {
                let entry = counts.entry(d as usize).or_default();
                entry.0 += 1;
                entry.1 += usize::from(had_edge);
            }
            None => disconnected += 1,
        }
    }
    if counts.is_empty() {
        return Err(Error::Data("no sampled pair is connected".into()));
    }
    let buckets: Vec<DistanceBucket> = counts
        .into_iter()
        .map(|(distance, (pairs, edges))| {
            let p = edges as f64 / pairs as f64;
            DistanceBucket {
                distance,
                pairs,
                edges,
                edge_probability: p,
                log_probability: p.ln(),
            }
        })
        .collect();
    let (xs, ys): (Vec<f64>, Vec<f64>) = buckets
        .iter()
        .filter(|b| b.edges > 0 && b.pairs >= min_bucket_pairs)
        .map(|b| (b.distance as f64, b.log_probability))
        .unzip();
    Ok(DistanceStudy {
        fit: linear_fit(&xs, &ys),
        buckets,
        sampled_pairs: pairs.len(),
        disconnected_pairs: disconnected,
    })
}

/// Samples `num_pairs` uniform unordered pairs of distinct vertices.
pub fn sample_vertex_pairs(n: usize, num_pairs: usize, seed: u64) -> Vec<(usize, usize)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..num_pairs)
        .map(|_| loop {
            let u = rng.gen_range(0..n);
            let v = rng.gen_range(0..n);
            if u != v {
                break (u, v);
            }
        })
        .collect()
}

pub fn distance_study(graph: &Graph, num_pairs: usize, seed: u64) -> Result<DistanceStudy> {
    if num_pairs == 0 {
        return Err(Error::Config("num_pairs must be at least 1".into()));
    }
    if graph.vertex_count() < 2 {
        return Err(Error::Data("need at least two vertices".into()));
    }
    let pairs = sample_vertex_pairs(graph.vertex_count(), num_pairs, seed);
    distance_table(graph, &pairs, MIN_BUCKET_PAIRS)
}
