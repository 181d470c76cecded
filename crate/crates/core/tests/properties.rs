mod common;

use graphgan::discriminator::{discriminator_gradient, pair_objective, Label, LabeledPair};
use graphgan::generator::{
    graph_softmax, graph_softmax_touched, log_graph_softmax, log_graph_softmax_grad,
    relevance_distribution, sample_online_touched,
};
use graphgan::graph::{bfs_tree, BfsTree, Graph};
use graphgan::params::EmbeddingTable;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{random_connected, uniform_table};

fn instance(seed: u64, n: usize, p: f64, dim: usize) -> (Graph, EmbeddingTable, ChaCha8Rng) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let graph = random_connected(&mut rng, n, p);
    let table = uniform_table(&mut rng, n, dim, 1.0);
    (graph, table, rng)
}

fn relevance(tree: &BfsTree, center: usize, to: usize, table: &EmbeddingTable) -> f64 {
    let dist = relevance_distribution(tree, center, table).unwrap();
    let i = dist.support.iter().position(|&u| u == to).unwrap();
    dist.probs[i]
}

fn subtree(tree: &BfsTree, v: usize, out: &mut Vec<usize>) {
    out.push(v);
    for c in tree.children(v) {
        subtree(tree, c, out);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn generation_probabilities_sum_to_one(
        seed in any::<u64>(), n in 2usize..40, p in 0.0f64..0.4, dim in 1usize..6,
    ) {
        let (graph, table, _) = instance(seed, n, p, dim);
        for root in 0..n {
            let tree = bfs_tree(&graph, root).unwrap();
            let total: f64 = (0..n)
                .filter(|&v| v != root)
                .map(|v| graph_softmax(&tree, v, &table).unwrap())
                .sum();
            prop_assert!((total - 1.0).abs() < 1e-9, "root {root}: {total}");
        }
    }

    /// The walk never climbs above a vertex it descended into, so the mass
    /// of a subtree is the probability of reaching its top.
    #[test]
    fn subtree_mass_is_reach_probability(
        seed in any::<u64>(), n in 3usize..30, p in 0.0f64..0.3, dim in 1usize..5,
    ) {
        let (graph, table, mut rng) = instance(seed, n, p, dim);
        let root = rng.gen_range(0..n);
        let tree = bfs_tree(&graph, root).unwrap();
        for w in (0..n).filter(|&w| w != root) {
            let mut reach = 1.0;
            let mut v = w;
            while let Some(parent) = tree.parent(v) {
                reach *= relevance(&tree, parent, v, &table);
                v = parent;
            }
            let mut members = Vec::new();
            subtree(&tree, w, &mut members);
            let mass: f64 = members.iter().map(|&u| graph_softmax(&tree, u, &table).unwrap()).sum();
            prop_assert!((mass - reach).abs() < 1e-12, "w {w}: {mass} vs {reach}");
        }
    }

    /// On a complete graph every tree is a star and generation reduces to a
    /// plain softmax over the other vertices.
    #[test]
    fn complete_graph_is_plain_softmax(seed in any::<u64>(), n in 2usize..25, dim in 1usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let edges: Vec<_> = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect();
        let graph = Graph::from_edges(n, edges).unwrap();
        let table = uniform_table(&mut rng, n, dim, 2.0);
        let root = rng.gen_range(0..n);
        let tree = bfs_tree(&graph, root).unwrap();
        let scores: Vec<f64> = (0..n)
            .map(|v| table.row(v).iter().zip(table.row(root)).map(|(a, b)| a * b).sum())
            .collect();
        let z: f64 = (0..n).filter(|&v| v != root).map(|v| scores[v].exp()).sum();
        for v in (0..n).filter(|&v| v != root) {
            let expected = scores[v].exp() / z;
            prop_assert!((graph_softmax(&tree, v, &table).unwrap() - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn generator_gradient_matches_finite_differences(
        seed in any::<u64>(), n in 2usize..25, p in 0.0f64..0.4, dim in 1usize..5,
    ) {
        let (graph, table, mut rng) = instance(seed, n, p, dim);
        let root = rng.gen_range(0..n);
        let target = (root + rng.gen_range(1..n)) % n;
        let tree = bfs_tree(&graph, root).unwrap();
        let grad = log_graph_softmax_grad(&tree, target, &table).unwrap();
        let h = 1e-5;
        for v in 0..n {
            for j in 0..dim {
                let mut plus = table.clone();
                plus.row_mut(v)[j] += h;
                let mut minus = table.clone();
                minus.row_mut(v)[j] -= h;
                let fd = (log_graph_softmax(&tree, target, &plus).unwrap()
                    - log_graph_softmax(&tree, target, &minus).unwrap())
                    / (2.0 * h);
                let analytic = grad.row(v).map_or(0.0, |r| r[j]);
                prop_assert!((fd - analytic).abs() < 1e-6, "v {v} j {j}: {fd} vs {analytic}");
            }
        }
    }

    #[test]
    fn discriminator_gradient_matches_finite_differences(
        seed in any::<u64>(), n in 2usize..12, dim in 1usize..5, batch in 1usize..10,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let table = uniform_table(&mut rng, n, dim, 1.0);
        let pairs: Vec<LabeledPair> = (0..batch)
            .map(|_| {
                let v = rng.gen_range(0..n);
                let c = (v + rng.gen_range(1..n)) % n;
                let label = if rng.gen_bool(0.5) { Label::Positive } else { Label::Negative };
                LabeledPair::new(v, c, label).unwrap()
            })
            .collect();
        let objective = |t: &EmbeddingTable| pairs.iter().map(|p| pair_objective(p, t)).sum::<f64>();
        let grad = discriminator_gradient(&pairs, &table);
        let h = 1e-5;
        for v in 0..n {
            for j in 0..dim {
                let mut plus = table.clone();
                plus.row_mut(v)[j] += h;
                let mut minus = table.clone();
                minus.row_mut(v)[j] -= h;
                let fd = (objective(&plus) - objective(&minus)) / (2.0 * h);
                let analytic = grad.row(v).map_or(0.0, |r| r[j]);
                prop_assert!((fd - analytic).abs() < 1e-6, "v {v} j {j}: {fd} vs {analytic}");
            }
        }
    }

    #[test]
    fn evaluation_and_sampling_stay_local(
        seed in any::<u64>(), n in 2usize..60, p in 0.0f64..0.2, dim in 1usize..4,
    ) {
        let (graph, table, mut rng) = instance(seed, n, p, dim);
        let root = rng.gen_range(0..n);
        let tree = bfs_tree(&graph, root).unwrap();
        let width = 1 + tree.max_tree_degree();
        for v in (0..n).filter(|&v| v != root) {
            let (_, touched) = graph_softmax_touched(&tree, v, &table).unwrap();
            prop_assert!(touched.len() <= (tree.depth(v).unwrap() + 1) * width);
        }
        for _ in 0..20 {
            let (trace, touched) = sample_online_touched(&tree, &table, &mut rng).unwrap();
            let depth = tree.depth(trace.sampled).unwrap();
            prop_assert!(touched.len() <= (depth + 1) * width);
            prop_assert!(trace.path.target() == trace.sampled);
            prop_assert!(trace.sampled != root);
        }
    }
}
