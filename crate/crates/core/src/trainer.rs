//! The alternating minimax loop.
//!
//! Each step has a parallel, read-only sampling phase over fixed-size chunks
//! of roots followed by a sequential reduction and a single update. Every
//! root draws from its own RNG stream derived from the master seed, and
//! chunk gradients are merged in root order, so results do not depend on
//! thread scheduling.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::discriminator::{self, pair_objective, Label, LabeledPair};
use crate::error::{Error, Result};
use crate::generator::{accumulate_policy_gradient, sample_online};
use crate::graph::{Forest, Graph};
use crate::params::{init_table, pretrain, EmbeddingTable, SparseGrad};

const ROOT_CHUNK: usize = 32;
/// Per-root positive budget when none is configured: `min(degree, cap)`.
pub const DEFAULT_T_CAP: usize = 20;

/// Hyperparameters. Defaults follow the published setup (`k = 20`,
/// `s = 20`, learning rate 0.001, 30 G-steps and 30 D-steps).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    /// Embedding dimension `k`.
    pub dim: usize,
    /// Generated samples per root per G-step.
    pub samples_s: usize,
    /// Positive and negative pairs per root per D-step; `None` uses
    /// `min(degree, 20)`.
    pub samples_t: Option<usize>,
    pub learning_rate: f64,
    pub g_steps: usize,
    pub d_steps: usize,
    pub max_iterations: usize,
    pub pretrain_epochs: usize,
    pub seed: u64,
    /// Relative change of the value estimate below which an iteration
    /// counts as stalled.
    pub convergence_tol: f64,
    /// Consecutive stalled iterations that stop training.
    pub convergence_window: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            dim: 20,
            samples_s: 20,
            samples_t: None,
            learning_rate: 0.001,
            g_steps: 30,
            d_steps: 30,
            max_iterations: 20,
            pretrain_epochs: 0,
            seed: 0,
            convergence_tol: 1e-4,
            convergence_window: 5,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Config(msg.to_owned()));
        if self.dim == 0 {
            return bad("dim must be at least 1");
        }
        if self.samples_s == 0 {
            return bad("samples_s must be at least 1");
        }
        if self.samples_t == Some(0) {
            return bad("samples_t must be at least 1");
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return bad("learning_rate must be positive");
        }
        if self.max_iterations == 0 {
            return bad("max_iterations must be at least 1");
        }
        if !(self.convergence_tol >= 0.0) {
            return bad("convergence_tol must be non-negative");
        }
        Ok(())
    }

    fn positive_budget(&self, degree: usize) -> usize {
        self.samples_t.unwrap_or(degree.min(DEFAULT_T_CAP))
    }
}

/// Per-iteration diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub iteration: usize,
    /// Monte-Carlo estimate of the minimax value after the iteration.
    pub value_estimate: f64,
    /// Mean cross-entropy of the last D-step batch (0 without D-steps).
    pub d_loss: f64,
    /// Mean `log(1 - D)` over the iteration's generated samples.
    pub g_reward_mean: f64,
    pub wall_time: f64,
    /// Embedding rows read or written by all updates of the iteration.
    pub rows_touched: usize,
}

pub const METRICS_HEADER: &str = "iteration,value_estimate,d_loss,g_reward_mean,wall_time";

impl MetricsRecord {
    /// CSV row matching [`METRICS_HEADER`]; `wall_time` is written as 0
    /// unless `with_time` is set, so repeated runs produce identical files.
    pub fn csv_row(&self, with_time: bool) -> String {
        let time = if with_time { self.wall_time } else { 0.0 };
        format!(
            "{},{},{},{},{}",
            self.iteration, self.value_estimate, self.d_loss, self.g_reward_mean, time
        )
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutput {
    pub theta_g: EmbeddingTable,
    pub theta_d: EmbeddingTable,
    pub metrics: Vec<MetricsRecord>,
    pub converged: bool,
}

/// `t` draws uniformly with replacement from the neighbors of `center`.
pub fn sample_positives(graph: &Graph, center: usize, t: usize, rng: &mut impl Rng) -> Vec<usize> {
    let nbrs = graph.neighbors(center);
    if nbrs.is_empty() {
        return Vec::new();
    }
    (0..t).map(|_| nbrs[rng.gen_range(0..nbrs.len())]).collect()
}

/// SplitMix64 finalizer over a sequence of tags.
pub fn derive_seed(master: u64, tags: &[u64]) -> u64 {
    let mut x = master;
    for &tag in tags {
        x = x.wrapping_add(0x9e37_79b9_7f4a_7c15).wrapping_add(tag);
        x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        x ^= x >> 31;
    }
    x
}

fn root_rng(seed: u64, phase: u64, iteration: usize, step: usize, root: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(
        seed,
        &[phase, iteration as u64, step as u64, root as u64],
    ))
}

const PHASE_G: u64 = 10;
const PHASE_D: u64 = 11;
const PHASE_VALUE: u64 = 12;

#[derive(Default)]
struct ChunkStats {
    reward_sum: f64,
    samples: usize,
    objective_sum: f64,
    pairs: usize,
    value: f64,
    rows: usize,
}

impl ChunkStats {
    fn absorb(&mut self, other: &ChunkStats) {
        self.reward_sum += other.reward_sum;
        self.samples += other.samples;
        self.objective_sum += other.objective_sum;
        self.pairs += other.pairs;
        self.value += other.value;
        self.rows += other.rows;
    }
}

/// Runs each chunk of roots in parallel and folds the results in root order.
fn per_chunk<F>(roots: &[usize], dim: usize, work: F) -> Result<(SparseGrad, ChunkStats)>
where
    F: Fn(usize, &mut SparseGrad, &mut ChunkStats) -> Result<()> + Sync,
{
    let parts: Vec<(SparseGrad, ChunkStats)> = roots
        .par_chunks(ROOT_CHUNK)
        .map(|chunk| {
            let mut acc = SparseGrad::new(dim);
            let mut stats = ChunkStats::default();
            for &root in chunk {
                work(root, &mut acc, &mut stats)?;
            }
            Ok((acc, stats))
        })
        .collect::<Result<_>>()?;
    let mut total = SparseGrad::new(dim);
    let mut stats = ChunkStats::default();
    for (acc, s) in &parts {
        total.merge(acc, 1.0);
        stats.absorb(s);
    }
    Ok((total, stats))
}

/// Draws `t` positives and `t` generator negatives for `root`.
fn labeled_pairs(
    graph: &Graph,
    forest: &Forest,
    theta_g: &EmbeddingTable,
    config: &TrainConfig,
    root: usize,
    rng: &mut ChaCha8Rng,
) -> Result<(Vec<LabeledPair>, usize)> {
    let Some(tree) = forest.tree(root) else {
        return Ok((Vec::new(), 0));
    };
    let t = config.positive_budget(graph.degree(root));
    let positives = sample_positives(graph, root, t, rng);
    if positives.is_empty() || tree.neighbor_count(root) == 0 {
        return Ok((Vec::new(), 0));
    }
    let mut pairs = Vec::with_capacity(2 * t);
    for v in positives {
        pairs.push(LabeledPair::new(v, root, Label::Positive)?);
    }
    for _ in 0..t {
        let trace = sample_online(&tree, theta_g, rng)?;
        pairs.push(LabeledPair::new(trace.sampled, root, Label::Negative)?);
    }
    Ok((pairs, t))
}

/// Per-root term of the value function: mean `log D` over positives plus
/// mean `log(1 - D)` over negatives.
fn root_value(pairs: &[LabeledPair], positives: usize, theta_d: &EmbeddingTable) -> f64 {
    let (pos, neg) = pairs.split_at(positives);
    let mean = |ps: &[LabeledPair]| {
        ps.iter().map(|p| pair_objective(p, theta_d)).sum::<f64>() / ps.len().max(1) as f64
    };
    mean(pos) + mean(neg)
}

pub fn train(graph: &Graph, config: &TrainConfig) -> Result<TrainOutput> {
    let forest = Forest::build(graph);
    train_with_forest(graph, &forest, config, |_, _, _| Ok(()))
}

/// Trains over the roots of `forest`. `observer` sees each iteration's
/// metrics and both tables after the iteration's updates.
pub fn train_with_forest<F>(
    graph: &Graph,
    forest: &Forest,
    config: &TrainConfig,
    mut observer: F,
) -> Result<TrainOutput>
where
    F: FnMut(&MetricsRecord, &EmbeddingTable, &EmbeddingTable) -> Result<()>,
{
    config.validate()?;
    if graph.vertex_count() == 0 || graph.edge_count() == 0 {
        return Err(Error::EmptyGraph);
    }
    let n = graph.vertex_count();
    let k = config.dim;
    let seed = config.seed;
    let mut theta_g = init_table(n, k, derive_seed(seed, &[1]));
    let mut theta_d = init_table(n, k, derive_seed(seed, &[2]));
    if config.pretrain_epochs > 0 {
        let lr = config.learning_rate;
        pretrain(&mut theta_g, graph, config.pretrain_epochs, lr, derive_seed(seed, &[3]))?;
        pretrain(&mut theta_d, graph, config.pretrain_epochs, lr, derive_seed(seed, &[4]))?;
    }

    let roots = forest.roots();
    let mut metrics: Vec<MetricsRecord> = Vec::new();
    let mut stalled = 0;
    let mut converged = false;
    let start = Instant::now();

    for iteration in 0..config.max_iterations {
        let iter_start = Instant::now();
        let with_context = |e: Error| match e {
            Error::NonFinite { context } => Error::NonFinite {
                context: format!("iteration {iteration}: {context}"),
            },
            other => other,
        };
        let mut reward_sum = 0.0;
        let mut reward_count = 0;
        let mut rows_touched = 0;

        for step in 0..config.g_steps {
            let (grad, stats) = per_chunk(roots, k, |root, acc, stats| {
                let Some(tree) = forest.tree(root) else {
                    return Ok(());
                };
                if tree.neighbor_count(root) == 0 {
                    return Ok(());
                }
                let mut rng = root_rng(seed, PHASE_G, iteration, step, root);
                for _ in 0..config.samples_s {
                    let trace = sample_online(&tree, &theta_g, &mut rng)?;
                    stats.reward_sum +=
                        accumulate_policy_gradient(&tree, &trace, &theta_g, &theta_d, acc)?;
                    stats.samples += 1;
                    stats.rows += trace.touched.len();
                }
                Ok(())
            })
            .map_err(with_context)?;
            theta_g
                .apply(&grad, -config.learning_rate)
                .map_err(with_context)?;
            reward_sum += stats.reward_sum;
            reward_count += stats.samples;
            rows_touched += stats.rows;
        }

        let mut d_loss = 0.0;
        for step in 0..config.d_steps {
            let (grad, stats) = per_chunk(roots, k, |root, acc, stats| {
                let mut rng = root_rng(seed, PHASE_D, iteration, step, root);
                let (pairs, _) = labeled_pairs(graph, forest, &theta_g, config, root, &mut rng)?;
                discriminator::accumulate_gradient(&pairs, &theta_d, acc);
                stats.objective_sum += pairs.iter().map(|p| pair_objective(p, &theta_d)).sum::<f64>();
                stats.pairs += pairs.len();
                stats.rows += 2 * pairs.len();
                Ok(())
            })
            .map_err(with_context)?;
            theta_d
                .apply(&grad, config.learning_rate)
                .map_err(with_context)?;
            d_loss = if stats.pairs == 0 {
                0.0
            } else {
                -stats.objective_sum / stats.pairs as f64
            };
            rows_touched += stats.rows;
        }

        let (_, value) = per_chunk(roots, k, |root, _, stats| {
            let mut rng = root_rng(seed, PHASE_VALUE, iteration, 0, root);
            let (pairs, positives) = labeled_pairs(graph, forest, &theta_g, config, root, &mut rng)?;
            if !pairs.is_empty() {
                stats.value += root_value(&pairs, positives, &theta_d);
            }
            Ok(())
        })
        .map_err(with_context)?;

        let record = MetricsRecord {
            iteration,
            value_estimate: value.value,
            d_loss,
            g_reward_mean: if reward_count == 0 {
                0.0
            } else {
                reward_sum / reward_count as f64
            },
            wall_time: iter_start.elapsed().as_secs_f64(),
            rows_touched,
        };
        if ![record.value_estimate, record.d_loss, record.g_reward_mean]
            .iter()
            .all(|x| x.is_finite())
        {
            return Err(Error::non_finite(format!("metrics of iteration {iteration}")));
        }
        log::info!(
            "iteration {iteration}: value {:.6} d_loss {:.6} g_reward {:.6} ({:.2}s, total {:.1}s)",
            record.value_estimate,
            record.d_loss,
            record.g_reward_mean,
            record.wall_time,
            start.elapsed().as_secs_f64()
        );

        if let Some(prev) = metrics.last() {
            let denom = prev.value_estimate.abs().max(1e-12);
            let change = (record.value_estimate - prev.value_estimate).abs() / denom;
            stalled = if change < config.convergence_tol {
                stalled + 1
            } else {
                0
            };
        }
        observer(&record, &theta_g, &theta_d)?;
        metrics.push(record);
        if config.convergence_window > 0 && stalled >= config.convergence_window {
            converged = true;
            break;
        }
    }

    Ok(TrainOutput {
        theta_g,
        theta_d,
        metrics,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> TrainConfig {
        TrainConfig {
            dim: 4,
            samples_s: 3,
            samples_t: Some(2),
            learning_rate: 0.05,
            g_steps: 2,
            d_steps: 2,
            max_iterations: 3,
            seed: 9,
            ..TrainConfig::default()
        }
    }

    fn ring(n: usize) -> Graph {
        Graph::from_edges(n, (0..n).map(|i| (i, (i + 1) % n))).unwrap()
    }

    #[test]
    fn defaults_match_published_setup() {
        let c = TrainConfig::default();
        assert_eq!((c.dim, c.samples_s, c.g_steps, c.d_steps), (20, 20, 30, 30));
        assert_eq!(c.learning_rate, 0.001);
        c.validate().unwrap();
    }

    #[test]
    fn invalid_configs_rejected() {
        let g = ring(4);
        for c in [
            TrainConfig { dim: 0, ..tiny() },
            TrainConfig { learning_rate: 0.0, ..tiny() },
            TrainConfig { samples_s: 0, ..tiny() },
            TrainConfig { max_iterations: 0, ..tiny() },
        ] {
            assert!(matches!(train(&g, &c), Err(Error::Config(_))));
        }
    }

    #[test]
    fn positives_repeat_single_neighbor() {
        let g = Graph::from_edges(3, [(0, 1)]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(sample_positives(&g, 0, 5, &mut rng), vec![1; 5]);
        assert!(sample_positives(&g, 2, 5, &mut rng).is_empty());
    }

    #[test]
    fn positives_are_uniform() {
        let g = Graph::from_edges(5, [(0, 1), (0, 2), (0, 3), (0, 4)]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let draws = sample_positives(&g, 0, 100_000, &mut rng);
        for v in 1..5 {
            let f = draws.iter().filter(|&&x| x == v).count() as f64 / 1e5;
            assert!((f - 0.25).abs() < 0.01, "{v}: {f}");
        }
    }

    #[test]
    fn training_is_deterministic() {
        let g = ring(8);
        let a = train(&g, &tiny()).unwrap();
        let b = train(&g, &tiny()).unwrap();
        assert_eq!(a.theta_g, b.theta_g);
        assert_eq!(a.theta_d, b.theta_d);
        let strip = |m: &[MetricsRecord]| m.iter().map(|r| r.csv_row(false)).collect::<Vec<_>>();
        assert_eq!(strip(&a.metrics), strip(&b.metrics));
    }

    #[test]
    fn deterministic_across_thread_counts() {
        let g = ring(70);
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| train(&g, &tiny()).unwrap())
        };
        let a = run(1);
        let b = run(4);
        assert_eq!(a.theta_g, b.theta_g);
        assert_eq!(a.theta_d, b.theta_d);
    }

    #[test]
    fn zero_step_counts_freeze_tables() {
        let g = ring(6);
        let init = train(
            &g,
            &TrainConfig {
                g_steps: 0,
                d_steps: 0,
                ..tiny()
            },
        )
        .unwrap();
        let no_d = train(&g, &TrainConfig { d_steps: 0, ..tiny() }).unwrap();
        assert_eq!(no_d.theta_d, init.theta_d);
        assert_ne!(no_d.theta_g, init.theta_g);
        let no_g = train(&g, &TrainConfig { g_steps: 0, ..tiny() }).unwrap();
        assert_eq!(no_g.theta_g, init.theta_g);
        assert_ne!(no_g.theta_d, init.theta_d);
    }

    #[test]
    fn metrics_are_append_only_and_finite() {
        let out = train(&ring(6), &tiny()).unwrap();
        assert_eq!(out.metrics.len(), 3);
        for (i, m) in out.metrics.iter().enumerate() {
            assert_eq!(m.iteration, i);
            assert!(m.value_estimate.is_finite() && m.value_estimate < 0.0);
            assert!(m.d_loss > 0.0);
            assert!(m.g_reward_mean < 0.0);
        }
    }

    #[test]
    fn convergence_stops_early() {
        let c = TrainConfig {
            convergence_tol: f64::INFINITY,
            convergence_window: 2,
            max_iterations: 10,
            ..tiny()
        };
        let out = train(&ring(6), &c).unwrap();
        assert!(out.converged);
        assert_eq!(out.metrics.len(), 3);
    }

    #[test]
    fn isolated_vertices_are_skipped() {
        let g = Graph::from_edges(5, [(0, 1), (1, 2), (2, 0)]).unwrap();
        let out = train(&g, &tiny()).unwrap();
        assert!(out.theta_g.is_finite());
    }
}
