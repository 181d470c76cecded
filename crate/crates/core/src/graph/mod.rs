//! Undirected simple graphs, edge-list ingestion and shortest-path trees.

mod forest;
mod load;
mod tree;

use std::collections::{HashMap, HashSet, VecDeque};

pub use forest::Forest;
pub use load::{load_bipartite_edge_list, load_edge_list, Bipartite, LoadOptions};
pub use tree::{
    bfs_tree, path_to, shortcut_bipartite_tree, validate_bipartite, BfsTree, ShortcutBuilder,
    TreePath,
};

use crate::error::{Error, Result};

/// Bijection between external vertex labels and dense indices `0..V`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IdMap {
    labels: Vec<String>,
    index: HashMap<String, usize>,
}

impl IdMap {
    pub fn new() -> Self {
        Self::default()
    }

    /// Labels `"0"`, `"1"`, … for graphs built directly from indices.
    pub fn numeric(n: usize) -> Self {
        let mut map = Self::new();
        for v in 0..n {
            map.get_or_insert(&v.to_string());
        }
        map
    }

    pub fn from_labels(labels: Vec<String>) -> Result<Self> {
        let mut index = HashMap::with_capacity(labels.len());
        for (i, label) in labels.iter().enumerate() {
            if index.insert(label.clone(), i).is_some() {
                return Err(Error::Data(format!("duplicate vertex label {label:?}")));
            }
        }
        Ok(Self { labels, index })
    }

    pub fn get_or_insert(&mut self, label: &str) -> usize {
        if let Some(&i) = self.index.get(label) {
            return i;
        }
        let i = self.labels.len();
        self.labels.push(label.to_owned());
        self.index.insert(label.to_owned(), i);
        i
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.index.get(label).copied()
    }

    pub fn label(&self, v: usize) -> &str {
        &self.labels[v]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Immutable undirected simple graph stored as sorted adjacency lists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    adjacency: Vec<Vec<usize>>,
    edge_count: usize,
    ids: IdMap,
}

impl Graph {
    /// Builds a graph over `ids.len()` vertices. Self-loops and repeated
    /// edges are dropped.
    pub fn from_labeled_edges<I>(ids: IdMap, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let n = ids.len();
        let mut adjacency = vec![Vec::new(); n];
        for (u, v) in edges {
            if u >= n {
                return Err(Error::InvalidVertex(u));
            }
            if v >= n {
                return Err(Error::InvalidVertex(v));
            }
            if u == v {
                continue;
            }
            adjacency[u].push(v);
            adjacency[v].push(u);
        }
        let mut degree_sum = 0;
        for list in &mut adjacency {
            list.sort_unstable();
            list.dedup();
            degree_sum += list.len();
        }
        Ok(Self {
            adjacency,
            edge_count: degree_sum / 2,
            ids,
        })
    }

    pub fn from_edges<I>(vertex_count: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        Self::from_labeled_edges(IdMap::numeric(vertex_count), edges)
    }

    pub fn vertex_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adjacency[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].len()
    }

    pub fn max_degree(&self) -> usize {
        self.adjacency.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn mean_degree(&self) -> f64 {
        if self.adjacency.is_empty() {
            0.0
        } else {
            2.0 * self.edge_count as f64 / self.adjacency.len() as f64
        }
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u < self.adjacency.len() && self.adjacency[u].binary_search(&v).is_ok()
    }

    /// Every edge once, as `(u, v)` with `u < v`, in ascending order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(u, list)| list.iter().filter(move |&&v| v > u).map(move |&v| (u, v)))
    }

    pub fn ids(&self) -> &IdMap {
        &self.ids
    }

    pub fn label(&self, v: usize) -> &str {
        self.ids.label(v)
    }

    pub fn check_vertex(&self, v: usize) -> Result<()> {
        if v < self.vertex_count() {
            Ok(())
        } else {
            Err(Error::InvalidVertex(v))
        }
    }

    /// Same vertex set and id map with the given edges removed. Edge keys
    /// are normalized to `(min, max)`.
    pub fn without_edges(&self, removed: &HashSet<(usize, usize)>) -> Graph {
        let adjacency: Vec<Vec<usize>> = self
            .adjacency
            .iter()
            .enumerate()
            .map(|(u, list)| {
                list.iter()
                    .copied()
                    .filter(|&v| !removed.contains(&edge_key(u, v)))
                    .collect()
            })
            .collect();
        let degree_sum: usize = adjacency.iter().map(Vec::len).sum();
        Graph {
            adjacency,
            edge_count: degree_sum / 2,
            ids: self.ids.clone(),
        }
    }

    /// Unweighted distances from `source`; `None` for unreachable vertices.
    pub fn distances_from(&self, source: usize) -> Vec<Option<u32>> {
        self.distances_avoiding(source, None)
    }

    /// BFS distances from `source` ignoring the single edge `skip`, if given.
    pub fn distances_avoiding(
        &self,
        source: usize,
        skip: Option<(usize, usize)>,
    ) -> Vec<Option<u32>> {
        let skip = skip.map(|(a, b)| edge_key(a, b));
        let mut dist = vec![None; self.vertex_count()];
        let mut queue = VecDeque::new();
        dist[source] = Some(0);
        queue.push_back(source);
        while let Some(u) = queue.pop_front() {
            let du = dist[u].unwrap();
            for &w in &self.adjacency[u] {
                if dist[w].is_some() || skip == Some(edge_key(u, w)) {
                    continue;
                }
                dist[w] = Some(du + 1);
                queue.push_back(w);
            }
        }
        dist
    }
}

/// Canonical `(min, max)` key for an undirected edge.
pub fn edge_key(u: usize, v: usize) -> (usize, usize) {
    if u <= v {
        (u, v)
    } else {
        (v, u)
    }
}

/// Unweighted shortest-path length between `u` and `v`, `None` if they are
/// disconnected.
pub fn shortest_distance(graph: &Graph, u: usize, v: usize) -> Result<Option<usize>> {
    graph.check_vertex(u)?;
    graph.check_vertex(v)?;
    if u == v {
        return Ok(Some(0));
    }
    let mut dist = vec![u32::MAX; graph.vertex_count()];
    let mut queue = VecDeque::new();
    dist[u] = 0;
    queue.push_back(u);
    while let Some(x) = queue.pop_front() {
        for &w in graph.neighbors(x) {
            if dist[w] != u32::MAX {
                continue;
            }
            dist[w] = dist[x] + 1;
            if w == v {
                return Ok(Some(dist[w] as usize));
            }
            queue.push_back(w);
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn floyd_warshall(g: &Graph) -> Vec<Vec<Option<usize>>> {
        let n = g.vertex_count();
        let inf = usize::MAX / 4;
        let mut d = vec![vec![inf; n]; n];
        for u in 0..n {
            d[u][u] = 0;
            for &v in g.neighbors(u) {
                d[u][v] = 1;
            }
        }
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    if d[i][k] + d[k][j] < d[i][j] {
                        d[i][j] = d[i][k] + d[k][j];
                    }
                }
            }
        }
        d.into_iter()
            .map(|row| row.into_iter().map(|x| (x < inf).then_some(x)).collect())
            .collect()
    }

    #[test]
    fn construction_normalizes_loops_and_duplicates() {
        let g = Graph::from_edges(3, [(0, 1), (1, 0), (1, 1), (1, 2), (0, 1)]).unwrap();
        assert_eq!(g.edge_count(), 2);
        assert_eq!(g.neighbors(1), &[0, 2]);
        assert_eq!(g.neighbors(0), &[1]);
        let degree_sum: usize = (0..3).map(|v| g.degree(v)).sum();
        assert_eq!(degree_sum, 2 * g.edge_count());
    }

    #[test]
    fn rejects_out_of_range_vertices() {
        assert!(matches!(
            Graph::from_edges(2, [(0, 2)]),
            Err(Error::InvalidVertex(2))
        ));
    }

    #[test]
    fn distance_basics() {
        let g = Graph::from_edges(4, [(0, 1), (1, 2)]).unwrap();
        assert_eq!(shortest_distance(&g, 2, 2).unwrap(), Some(0));
        assert_eq!(shortest_distance(&g, 0, 1).unwrap(), Some(1));
        assert_eq!(shortest_distance(&g, 0, 2).unwrap(), Some(2));
        assert_eq!(shortest_distance(&g, 0, 3).unwrap(), None);
    }

    #[test]
    fn distance_matches_all_pairs_oracle() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let n = rng.gen_range(2..=64);
            let p = rng.gen_range(0.02..0.2);
            let mut edges = Vec::new();
            for u in 0..n {
                for v in u + 1..n {
                    if rng.gen_bool(p) {
                        edges.push((u, v));
                    }
                }
            }
            let g = Graph::from_edges(n, edges).unwrap();
            let oracle = floyd_warshall(&g);
            for u in 0..n {
                let bfs = g.distances_from(u);
                for v in 0..n {
                    assert_eq!(shortest_distance(&g, u, v).unwrap(), oracle[u][v]);
                    assert_eq!(bfs[v].map(|d| d as usize), oracle[u][v]);
                }
            }
        }
    }

    #[test]
    fn removing_edges_keeps_ids() {
        let g = Graph::from_edges(3, [(0, 1), (1, 2), (0, 2)]).unwrap();
        let removed: HashSet<_> = [edge_key(2, 0)].into_iter().collect();
        let h = g.without_edges(&removed);
        assert_eq!(h.edge_count(), 2);
        assert!(!h.has_edge(0, 2));
        assert_eq!(h.ids(), g.ids());
        let d = g.distances_avoiding(0, Some((2, 0)));
        assert_eq!(d[2], Some(2));
    }
}
