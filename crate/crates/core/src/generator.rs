//! Graph-softmax generator.
//!
//! For a root `c` and its BFS tree, the relevance of a tree neighbor `u` of
//! `v` is a softmax over the tree neighbors of `v` of `g_u · g_v`. The
//! probability of generating `v` is the product of relevances along the
//! root-to-`v` path times the relevance of `v`'s parent as seen from `v`:
//! the chance that a walk down the tree turns around for the first time at
//! `v`. Evaluating it reads only the rows on the path and their tree
//! neighbors.

use std::cell::RefCell;
use std::collections::BTreeSet;

use rand::Rng;

use crate::discriminator::d_score;
use crate::error::{Error, Result};
use crate::graph::{path_to, BfsTree, TreePath};
use crate::params::{dot, EmbeddingTable, SparseGrad};

/// Upper clamp applied to `D` before taking `log(1 - D)`.
pub const D_CLAMP: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct RelevanceDistribution {
    pub center: usize,
    /// Tree neighbors: parent first (if any), then children ascending.
    pub support: Vec<usize>,
    pub probs: Vec<f64>,
}

/// A generated vertex together with the walk that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleTrace {
    pub root: usize,
    pub sampled: usize,
    pub path: TreePath,
    /// Path vertices and their tree neighbors, ascending.
    pub touched: Vec<usize>,
}

/// Row reads, optionally recorded.
struct Rows<'a> {
    table: &'a EmbeddingTable,
    log: Option<RefCell<BTreeSet<usize>>>,
}

impl<'a> Rows<'a> {
    fn plain(table: &'a EmbeddingTable) -> Self {
        Self { table, log: None }
    }

    fn recording(table: &'a EmbeddingTable) -> Self {
        Self {
            table,
            log: Some(RefCell::new(BTreeSet::new())),
        }
    }

    fn row(&self, v: usize) -> &'a [f64] {
        if let Some(log) = &self.log {
            log.borrow_mut().insert(v);
        }
        self.table.row(v)
    }

    fn into_touched(self) -> Vec<usize> {
        self.log
            .map(|l| l.into_inner().into_iter().collect())
            .unwrap_or_default()
    }
}

/// Fills `support` and `log_probs` with the log-relevance distribution at `v`.
fn log_relevance(
    tree: &BfsTree,
    v: usize,
    rows: &Rows<'_>,
    support: &mut Vec<usize>,
    log_probs: &mut Vec<f64>,
) -> Result<()> {
    if !tree.is_reachable(v) {
        return Err(Error::NotInComponent {
            root: tree.root(),
            vertex: v,
        });
    }
    support.clear();
    support.extend(tree.neighbors(v));
    if support.is_empty() {
        return Err(Error::IsolatedVertex(v));
    }
    let center = rows.row(v);
    log_probs.clear();
    log_probs.extend(support.iter().map(|&u| dot(rows.row(u), center)));
    let max = log_probs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let norm = log_probs.iter().map(|&s| (s - max).exp()).sum::<f64>().ln() + max;
    for lp in log_probs.iter_mut() {
        *lp -= norm;
    }
    if !norm.is_finite() {
        return Err(Error::non_finite(format!("relevance at vertex {v}")));
    }
    Ok(())
}

/// Softmax over the tree neighbors of `v` of their inner products with `v`.
pub fn relevance_distribution(
    tree: &BfsTree,
    v: usize,
    theta_g: &EmbeddingTable,
) -> Result<RelevanceDistribution> {
    let mut support = Vec::new();
    let mut log_probs = Vec::new();
    log_relevance(tree, v, &Rows::plain(theta_g), &mut support, &mut log_probs)?;
    Ok(RelevanceDistribution {
        center: v,
        support,
        probs: log_probs.into_iter().map(f64::exp).collect(),
    })
}

/// The `m + 1` (center, chosen neighbor) pairs whose relevances multiply to
/// the generation probability of the path's target.
fn factors(path: &TreePath) -> impl Iterator<Item = (usize, usize)> + '_ {
    let p = path.vertices();
    let m = p.len() - 1;
    p.windows(2)
        .map(|w| (w[0], w[1]))
        .chain(std::iter::once((p[m], p[m - 1])))
}

fn log_graph_softmax_with(tree: &BfsTree, target: usize, rows: &Rows<'_>) -> Result<f64> {
    let path = path_to(tree, target)?;
    let mut support = Vec::new();
    let mut log_probs = Vec::new();
    let mut total = 0.0;
    for (center, chosen) in factors(&path) {
        log_relevance(tree, center, rows, &mut support, &mut log_probs)?;
        let i = support.iter().position(|&u| u == chosen).unwrap();
        total += log_probs[i];
    }
    Ok(total)
}

/// `log G(target | root)`.
pub fn log_graph_softmax(tree: &BfsTree, target: usize, theta_g: &EmbeddingTable) -> Result<f64> {
    log_graph_softmax_with(tree, target, &Rows::plain(theta_g))
}

/// `G(target | root)` for the tree's root.
pub fn graph_softmax(tree: &BfsTree, target: usize, theta_g: &EmbeddingTable) -> Result<f64> {
    log_graph_softmax(tree, target, theta_g).map(f64::exp)
}

/// [`graph_softmax`] plus the set of embedding rows actually read.
pub fn graph_softmax_touched(
    tree: &BfsTree,
    target: usize,
    theta_g: &EmbeddingTable,
) -> Result<(f64, Vec<usize>)> {
    let rows = Rows::recording(theta_g);
    let lp = log_graph_softmax_with(tree, target, &rows)?;
    Ok((lp.exp(), rows.into_touched()))
}

fn draw(log_probs: &[f64], rng: &mut impl Rng) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, lp) in log_probs.iter().enumerate() {
        acc += lp.exp();
        if u < acc {
            return i;
        }
    }
    log_probs.len() - 1
}

fn sample_with(tree: &BfsTree, rows: &Rows<'_>, rng: &mut impl Rng) -> Result<SampleTrace> {
    let root = tree.root();
    let cap = 4 * tree.height() + 8;
    let mut support = Vec::new();
    let mut log_probs = Vec::new();
    let mut walk = vec![root];
    let mut previous = root;
    let mut current = root;
    for _ in 0..cap {
        log_relevance(tree, current, rows, &mut support, &mut log_probs)?;
        let next = support[draw(&log_probs, rng)];
        if next == previous && current != root {
            let path = TreePath::from_vertices(walk);
            let touched = touched_set(tree, &path);
            return Ok(SampleTrace {
                root,
                sampled: current,
                path,
                touched,
            });
        }
        // the root has no parent, so any choice there descends
        previous = current;
        current = next;
        walk.push(current);
    }
    Err(Error::WalkLimit { root, cap })
}

fn touched_set(tree: &BfsTree, path: &TreePath) -> Vec<usize> {
    let mut set = BTreeSet::new();
    for &v in path.vertices() {
        set.insert(v);
        set.extend(tree.neighbors(v));
    }
    set.into_iter().collect()
}

/// Online generation: walk down the tree choosing neighbors by relevance and
/// return the current vertex the first time the walk picks its parent.
pub fn sample_online(
    tree: &BfsTree,
    theta_g: &EmbeddingTable,
    rng: &mut impl Rng,
) -> Result<SampleTrace> {
    sample_with(tree, &Rows::plain(theta_g), rng)
}

/// [`sample_online`] plus the set of embedding rows actually read.
pub fn sample_online_touched(
    tree: &BfsTree,
    theta_g: &EmbeddingTable,
    rng: &mut impl Rng,
) -> Result<(SampleTrace, Vec<usize>)> {
    let rows = Rows::recording(theta_g);
    let trace = sample_with(tree, &rows, rng)?;
    Ok((trace, rows.into_touched()))
}

/// Adds `scale · ∇ log G(target | root)` to `acc`. Every row of a factor's
/// softmax support is entered, even when its contribution is zero.
pub fn accumulate_log_grad(
    tree: &BfsTree,
    target: usize,
    theta_g: &EmbeddingTable,
    scale: f64,
    acc: &mut SparseGrad,
) -> Result<()> {
    let path = path_to(tree, target)?;
    let rows = Rows::plain(theta_g);
    let mut support = Vec::new();
    let mut log_probs = Vec::new();
    let mut expected = vec![0.0; theta_g.dim()];
    for (center, chosen) in factors(&path) {
        log_relevance(tree, center, &rows, &mut support, &mut log_probs)?;
        let g_center = theta_g.row(center);
        expected.iter_mut().for_each(|x| *x = 0.0);
        for (&u, lp) in support.iter().zip(&log_probs) {
            let p = lp.exp();
            acc.add(u, -scale * p, g_center);
            for (e, x) in expected.iter_mut().zip(theta_g.row(u)) {
                *e += p * x;
            }
        }
        acc.add(chosen, scale, g_center);
        acc.add(center, scale, theta_g.row(chosen));
        acc.add(center, -scale, &expected);
    }
    Ok(())
}

/// `∇_{θ_G} log G(target | root)` as a sparse row map.
pub fn log_graph_softmax_grad(
    tree: &BfsTree,
    target: usize,
    theta_g: &EmbeddingTable,
) -> Result<SparseGrad> {
    let mut grad = SparseGrad::new(theta_g.dim());
    accumulate_log_grad(tree, target, theta_g, 1.0, &mut grad)?;
    Ok(grad)
}

/// Policy-gradient weight `log(1 - D(v, root))`, with `D` clamped below 1.
pub fn reward(sampled: usize, root: usize, theta_d: &EmbeddingTable) -> f64 {
    let d = d_score(sampled, root, theta_d).min(1.0 - D_CLAMP);
    (1.0 - d).ln()
}

/// Adds `log(1 - D) · ∇ log G` for one trace into `acc`; returns the weight.
pub fn accumulate_policy_gradient(
    tree: &BfsTree,
    trace: &SampleTrace,
    theta_g: &EmbeddingTable,
    theta_d: &EmbeddingTable,
    acc: &mut SparseGrad,
) -> Result<f64> {
    let weight = reward(trace.sampled, trace.root, theta_d);
    accumulate_log_grad(tree, trace.sampled, theta_g, weight, acc)?;
    Ok(weight)
}

/// One descent step on the generator: `θ_G -= lr · Σ log(1 - D) ∇ log G`,
/// accumulated over all traces and applied once. Returns the mean weight.
pub fn generator_step(
    batch: &[(&BfsTree, &SampleTrace)],
    theta_g: &mut EmbeddingTable,
    theta_d: &EmbeddingTable,
    learning_rate: f64,
) -> Result<f64> {
    let mut acc = SparseGrad::new(theta_g.dim());
    let mut total = 0.0;
    for (tree, trace) in batch {
        total += accumulate_policy_gradient(tree, trace, theta_g, theta_d, &mut acc)?;
    }
    theta_g.apply(&acc, -learning_rate)?;
    Ok(if batch.is_empty() {
        0.0
    } else {
        total / batch.len() as f64
    })
}
