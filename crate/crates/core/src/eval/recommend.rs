//! Top-K recommendation over a user/item graph.

use std::collections::{HashMap, HashSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::link::round_half_up;
use crate::error::{Error, Result};
use crate::graph::{edge_key, Bipartite};
use crate::params::{dot, EmbeddingTable};

#[derive(Debug, Clone)]
pub struct RecSplit {
    pub train: Bipartite,
    /// `(user, item)` pairs removed from training.
    pub hidden: Vec<(usize, usize)>,
}

/// Hides `round_half_up(E · fraction)` random ratings, skipping any whose
/// removal would leave its user without a training rating.
pub fn split_ratings(data: &Bipartite, fraction: f64, seed: u64) -> Result<RecSplit> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::Config(format!("holdout fraction {fraction} is not in (0, 1)")));
    }
    let graph = &data.graph;
    let mut edges: Vec<(usize, usize)> = graph
        .edges()
        .map(|(a, b)| if data.is_user[a] { (a, b) } else { (b, a) })
        .collect();
    let target = round_half_up(edges.len() as f64 * fraction).max(1);
    edges.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut remaining: Vec<usize> = (0..graph.vertex_count()).map(|v| graph.degree(v)).collect();
    let mut hidden = Vec::with_capacity(target);
    for (u, m) in edges {
        if hidden.len() == target {
            break;
        }
        if remaining[u] > 1 {
            remaining[u] -= 1;
            remaining[m] -= 1;
            hidden.push((u, m));
        }
    }
    hidden.sort_unstable();
    let removed: HashSet<_> = hidden.iter().map(|&(u, m)| edge_key(u, m)).collect();
    Ok(RecSplit {
        train: Bipartite {
            graph: graph.without_edges(&removed),
            is_user: data.is_user.clone(),
        },
        hidden,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserRanking {
    pub user: usize,
    /// Top items, best first, at most `max(K)` long.
    pub items: Vec<usize>,
    pub hidden: usize,
    /// Hits within the top `K` for each requested `K`.
    pub hits: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingResult {
    pub k_list: Vec<usize>,
    pub precision: Vec<f64>,
    pub recall: Vec<f64>,
    pub users: Vec<UserRanking>,
}

/// Ranks each user's unwatched items by inner product (ties by ascending
/// index) and averages precision@K and recall@K over users with at least
/// one hidden item.
pub fn recommendation_eval(
    embeddings: &EmbeddingTable,
    train: &Bipartite,
    hidden: &[(usize, usize)],
    k_list: &[usize],
) -> Result<RankingResult> {
    let graph = &train.graph;
    if embeddings.rows() != graph.vertex_count() {
        return Err(Error::DimensionMismatch {
            expected: graph.vertex_count(),
            found: embeddings.rows(),
        });
    }
    if k_list.is_empty() || k_list.contains(&0) {
        return Err(Error::Config("K values must be positive".into()));
    }
    let mut by_user: HashMap<usize, HashSet<usize>> = HashMap::new();
    for &(u, m) in hidden {
        if !train.is_user[u] || train.is_user[m] {
            return Err(Error::Data(format!("hidden pair {u}-{m} is not user-item")));
        }
        if graph.has_edge(u, m) {
            return Err(Error::Data(format!("hidden pair {u}-{m} is a training edge")));
        }
        by_user.entry(u).or_default().insert(m);
    }
    let mut users: Vec<usize> = by_user.keys().copied().collect();
    users.sort_unstable();
    let items: Vec<usize> = train.items().collect();
    let max_k = *k_list.iter().max().unwrap();

    let rankings: Vec<Option<UserRanking>> = users
        .par_iter()
        .map(|&u| {
            let watched = graph.neighbors(u);
            let mut scored: Vec<(f64, usize)> = items
                .iter()
                .filter(|m| watched.binary_search(m).is_err())
                .map(|&m| (dot(embeddings.row(u), embeddings.row(m)), m))
                .collect();
            if scored.is_empty() {
                log::warn!("user {} has no unwatched items; skipped", graph.label(u));
                return None;
            }
            scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
            scored.truncate(max_k);
            let top: Vec<usize> = scored.into_iter().map(|(_, m)| m).collect();
            let relevant = &by_user[&u];
            let hits = k_list
                .iter()
                .map(|&k| top.iter().take(k).filter(|m| relevant.contains(m)).count())
                .collect();
            Some(UserRanking {
                user: u,
                items: top,
                hidden: relevant.len(),
                hits,
            })
        })
        .collect();
    let users: Vec<UserRanking> = rankings.into_iter().flatten().collect();
    if users.is_empty() {
        return Err(Error::Data("no user could be evaluated".into()));
    }
    let n = users.len() as f64;
    let precision = k_list
        .iter()
        .enumerate()
        .map(|(i, &k)| users.iter().map(|r| r.hits[i] as f64 / k as f64).sum::<f64>() / n)
        .collect();
    let recall = (0..k_list.len())
        .map(|i| users.iter().map(|r| r.hits[i] as f64 / r.hidden as f64).sum::<f64>() / n)
        .collect();
    Ok(RankingResult {
        k_list: k_list.to_vec(),
        precision,
        recall,
        users,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Graph;
    use crate::params::init_table;
    use rand::Rng;

    fn bipartite(users: usize, items: usize, edges: &[(usize, usize)]) -> Bipartite {
        Bipartite {
            graph: Graph::from_edges(users + items, edges.iter().map(|&(u, m)| (u, users + m)))
                .unwrap(),
            is_user: (0..users + items).map(|v| v < users).collect(),
        }
    }

    #[test]
    fn single_hidden_item_ranked_first() {
        // user 0 watched vertex 1; hidden vertex 3 scores above vertex 2
        let train = bipartite(1, 3, &[(0, 0)]);
        let emb = EmbeddingTable::from_rows(vec![
            vec![1.0, 0.0],
            vec![0.0, 0.0],
            vec![0.0, 1.0],
            vec![0.5, 0.0],
        ])
        .unwrap();
        let r = recommendation_eval(&emb, &train, &[(0, 3)], &[1, 2]).unwrap();
        assert_eq!(r.users[0].items, vec![3, 2]);
        assert_eq!(r.precision[0], 1.0);
        assert_eq!(r.recall[0], 1.0);
        assert_eq!(r.precision[1], 0.5);
    }

    #[test]
    fn ties_break_by_index_and_watched_items_are_excluded() {
        let train = bipartite(1, 4, &[(0, 1)]);
        let emb = EmbeddingTable::zeros(5, 2);
        let r = recommendation_eval(&emb, &train, &[(0, 4)], &[3]).unwrap();
        assert_eq!(r.users[0].items, vec![1, 3, 4]);
    }

    #[test]
    fn stratified_split_keeps_a_training_rating() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut edges = vec![];
        for u in 0..30 {
            for m in 0..20 {
                if rng.gen_bool(0.2) {
                    edges.push((u, m));
                }
            }
        }
        let data = bipartite(30, 20, &edges);
        let s = split_ratings(&data, 0.1, 5).unwrap();
        assert_eq!(s.hidden.len(), round_half_up(data.graph.edge_count() as f64 * 0.1));
        for u in data.users() {
            if data.graph.degree(u) > 0 {
                assert!(s.train.graph.degree(u) >= 1);
            }
        }
        for &(u, m) in &s.hidden {
            assert!(data.graph.has_edge(u, m) && !s.train.graph.has_edge(u, m));
            assert!(data.is_user[u]);
        }
    }

    #[test]
    fn recall_grows_with_k_and_random_precision_is_chance() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (users, items) = (200, 100);
        let mut edges = vec![];
        for u in 0..users {
            for m in 0..items {
                if rng.gen_bool(0.1) {
                    edges.push((u, m));
                }
            }
        }
        let data = bipartite(users, items, &edges);
        let split = split_ratings(&data, 0.1, 3).unwrap();
        let emb = init_table(users + items, 8, 4);
        let ks: Vec<usize> = (1..=40).collect();
        let r = recommendation_eval(&emb, &split.train, &split.hidden, &ks).unwrap();
        for u in &r.users {
            for w in u.hits.windows(2) {
                assert!(w[0] <= w[1]);
            }
        }
        for w in r.recall.windows(2) {
            assert!(w[0] <= w[1]);
        }
        // chance: hidden per user / candidates per user
        let chance: f64 = r
            .users
            .iter()
            .map(|x| x.hidden as f64 / (items - split.train.graph.degree(x.user)) as f64)
            .sum::<f64>()
            / r.users.len() as f64;
        let p20 = r.precision[19];
        assert!((p20 - chance).abs() < 0.02, "{p20} vs {chance}");
        for p in r.precision.iter().chain(&r.recall) {
            assert!((0.0..=1.0).contains(p));
        }
    }

    #[test]
    fn invalid_hidden_pairs_rejected() {
        let train = bipartite(1, 2, &[(0, 0)]);
        let emb = EmbeddingTable::zeros(3, 2);
        assert!(recommendation_eval(&emb, &train, &[(0, 1)], &[1]).is_err());
        assert!(recommendation_eval(&emb, &train, &[(1, 2)], &[1]).is_err());
        assert!(recommendation_eval(&emb, &train, &[(0, 2)], &[0]).is_err());
    }
}
