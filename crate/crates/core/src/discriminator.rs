//! Sigmoid inner-product edge scorer.

use crate::error::{Error, Result};
use crate::params::{sigmoid, EmbeddingTable, SparseGrad};

/// Bounds applied to `D` inside logarithms.
pub const LOG_CLAMP: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Label {
    /// Observed edge.
    Positive,
    /// Drawn from the generator.
    Negative,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LabeledPair {
    pub v: usize,
    pub center: usize,
    pub label: Label,
}

impl LabeledPair {
    pub fn new(v: usize, center: usize, label: Label) -> Result<Self> {
        if v == center {
            return Err(Error::Data(format!("pair ({v}, {center}) is a self-pair")));
        }
        Ok(Self { v, center, label })
    }
}

/// `σ(d_v · d_c)`.
pub fn d_score(v: usize, center: usize, theta_d: &EmbeddingTable) -> f64 {
    sigmoid(theta_d.dot(v, center))
}

fn clamp(d: f64) -> f64 {
    d.clamp(LOG_CLAMP, 1.0 - LOG_CLAMP)
}

/// `log D` for positives, `log(1 - D)` for negatives.
pub fn pair_objective(pair: &LabeledPair, theta_d: &EmbeddingTable) -> f64 {
    let d = clamp(d_score(pair.v, pair.center, theta_d));
    match pair.label {
        Label::Positive => d.ln(),
        Label::Negative => (1.0 - d).ln(),
    }
}

/// Adds the gradient of the summed pair objectives into `acc`. Each pair
/// touches only its two rows.
pub fn accumulate_gradient(pairs: &[LabeledPair], theta_d: &EmbeddingTable, acc: &mut SparseGrad) {
    for pair in pairs {
        let d = d_score(pair.v, pair.center, theta_d);
        let coef = match pair.label {
            Label::Positive => 1.0 - d,
            Label::Negative => -d,
        };
        acc.add(pair.v, coef, theta_d.row(pair.center));
        acc.add(pair.center, coef, theta_d.row(pair.v));
    }
}

pub fn discriminator_gradient(pairs: &[LabeledPair], theta_d: &EmbeddingTable) -> SparseGrad {
    let mut acc = SparseGrad::new(theta_d.dim());
    accumulate_gradient(pairs, theta_d, &mut acc);
    acc
}

/// One batched ascent step on `Σ log D(pos) + Σ log(1 - D(neg))`.
/// Returns the mean binary cross-entropy of the batch before the update.
pub fn discriminator_step(
    pairs: &[LabeledPair],
    theta_d: &mut EmbeddingTable,
    learning_rate: f64,
) -> Result<f64> {
    let loss = mean_loss(pairs, theta_d);
    let grad = discriminator_gradient(pairs, theta_d);
    theta_d.apply(&grad, learning_rate)?;
    Ok(loss)
}

/// Mean of `-objective` over the pairs; 0 for an empty batch.
pub fn mean_loss(pairs: &[LabeledPair], theta_d: &EmbeddingTable) -> f64 {
    if pairs.is_empty() {
        return 0.0;
    }
    -pairs.iter().map(|p| pair_objective(p, theta_d)).sum::<f64>() / pairs.len() as f64
}
