#![allow(dead_code)]

use graphgan::graph::Graph;
use graphgan::params::EmbeddingTable;
use rand::seq::SliceRandom;
use rand::Rng;

/// Random spanning tree plus independent extra edges with probability `p`.
pub fn random_connected(rng: &mut impl Rng, n: usize, p: f64) -> Graph {
    let mut edges = Vec::new();
    for v in 1..n {
        edges.push((rng.gen_range(0..v), v));
    }
    for u in 0..n {
        for v in u + 1..n {
            if rng.gen_bool(p) {
                edges.push((u, v));
            }
        }
    }
    Graph::from_edges(n, edges).unwrap()
}

/// Erdős–Rényi `G(n, mean_degree / (n - 1))`, sampled by geometric skips.
pub fn erdos_renyi(rng: &mut impl Rng, n: usize, mean_degree: f64) -> Graph {
    let p = mean_degree / (n - 1) as f64;
    let log_q = (1.0 - p).ln();
    let mut edges = Vec::new();
    let (mut v, mut w): (i64, i64) = (1, -1);
    let n = n as i64;
    while v < n {
        let r: f64 = rng.gen();
        w += 1 + ((1.0 - r).ln() / log_q).floor() as i64;
        while w >= v && v < n {
            w -= v;
            v += 1;
        }
        if v < n {
            edges.push((v as usize, w as usize));
        }
    }
    Graph::from_edges(n as usize, edges).unwrap()
}

/// Simple connected 3-regular graph via the configuration model with retries.
pub fn random_cubic(rng: &mut impl Rng, n: usize) -> Graph {
    assert!(n % 2 == 0);
    loop {
        let mut stubs: Vec<usize> = (0..n).flat_map(|v| [v, v, v]).collect();
        stubs.shuffle(rng);
        let pairs: Vec<(usize, usize)> = stubs.chunks(2).map(|c| (c[0], c[1])).collect();
        let simple = pairs.iter().all(|&(a, b)| a != b);
        let graph = Graph::from_edges(n, pairs).unwrap();
        if simple
            && graph.edge_count() == 3 * n / 2
            && graph.distances_from(0).iter().all(Option::is_some)
        {
            return graph;
        }
    }
}

/// Two planted communities `0..half` and `half..2·half`.
pub fn two_communities(rng: &mut impl Rng, half: usize, p_in: f64, p_out: f64) -> Graph {
    let n = 2 * half;
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            let p = if (u < half) == (v < half) { p_in } else { p_out };
            if rng.gen_bool(p) {
                edges.push((u, v));
            }
        }
    }
    Graph::from_edges(n, edges).unwrap()
}

pub fn uniform_table(rng: &mut impl Rng, rows: usize, dim: usize, scale: f64) -> EmbeddingTable {
    let rows = (0..rows)
        .map(|_| (0..dim).map(|_| rng.gen_range(-scale..=scale)).collect())
        .collect();
    EmbeddingTable::from_rows(rows).unwrap()
}

pub fn write_edge_list(graph: &Graph, path: &std::path::Path) {
    let mut text = String::new();
    for (u, v) in graph.edges() {
        text.push_str(&format!("{} {}\n", graph.label(u), graph.label(v)));
    }
    std::fs::write(path, text).unwrap();
}
