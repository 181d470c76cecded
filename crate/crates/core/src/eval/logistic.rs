//! Binary logistic regression by full-batch gradient descent.

use crate::error::{Error, Result};
use crate::params::{dot, sigmoid};

#[derive(Debug, Clone, PartialEq)]
pub struct LogisticModel {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl LogisticModel {
    pub fn probability(&self, x: &[f64]) -> f64 {
        sigmoid(dot(&self.weights, x) + self.bias)
    }

    pub fn predict(&self, x: &[f64]) -> bool {
        self.probability(x) >= 0.5
    }
}

fn check(features: &[Vec<f64>], labels: &[bool]) -> Result<usize> {
    if features.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: features.len(),
            found: labels.len(),
        });
    }
    let dim = features.first().map_or(0, Vec::len);
    for f in features {
        if f.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: f.len(),
            });
        }
    }
    if features.is_empty() {
        return Err(Error::Data("no training examples".into()));
    }
    Ok(dim)
}

/// Mean binary cross-entropy of `model` on the data.
pub fn log_loss(model: &LogisticModel, features: &[Vec<f64>], labels: &[bool]) -> f64 {
    let eps = 1e-15;
    let total: f64 = features
        .iter()
        .zip(labels)
        .map(|(x, &y)| {
            let p = model.probability(x).clamp(eps, 1.0 - eps);
            if y {
                -p.ln()
            } else {
                -(1.0 - p).ln()
            }
        })
        .sum();
    total / features.len() as f64
}

/// Starts from zero weights and takes `epochs` full-batch steps on the mean
/// cross-entropy. Also returns the loss before each step.
pub fn train_logistic_traced(
    features: &[Vec<f64>],
    labels: &[bool],
    epochs: usize,
    learning_rate: f64,
) -> Result<(LogisticModel, Vec<f64>)> {
    let dim = check(features, labels)?;
    let n = features.len() as f64;
    let mut model = LogisticModel {
        weights: vec![0.0; dim],
        bias: 0.0,
    };
    let mut losses = Vec::with_capacity(epochs);
    let mut grad_w = vec![0.0; dim];
    for epoch in 0..epochs {
        losses.push(log_loss(&model, features, labels));
        grad_w.iter_mut().for_each(|g| *g = 0.0);
        let mut grad_b = 0.0;
        for (x, &y) in features.iter().zip(labels) {
            let err = model.probability(x) - f64::from(u8::from(y));
            for (g, xi) in grad_w.iter_mut().zip(x) {
                *g += err * xi;
            }
            grad_b += err;
        }
        for (w, g) in model.weights.iter_mut().zip(&grad_w) {
            *w -= learning_rate * g / n;
        }
        model.bias -= learning_rate * grad_b / n;
        if !model.bias.is_finite() || model.weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::non_finite(format!("logistic regression epoch {epoch}")));
        }
    }
    Ok((model, losses))
}

pub fn train_logistic(
    features: &[Vec<f64>],
    labels: &[bool],
    epochs: usize,
    learning_rate: f64,
) -> Result<LogisticModel> {
    train_logistic_traced(features, labels, epochs, learning_rate).map(|(m, _)| m)
}

/// Per-feature z-scoring fitted on training data.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    mean: Vec<f64>,
    scale: Vec<f64>,
}

impl Standardizer {
    pub fn fit(features: &[Vec<f64>]) -> Self {
        let dim = features.first().map_or(0, Vec::len);
        let n = features.len().max(1) as f64;
        let mut mean = vec![0.0; dim];
        for f in features {
            for (m, x) in mean.iter_mut().zip(f) {
                *m += x / n;
            }
        }
        let mut var = vec![0.0; dim];
        for f in features {
            for ((v, x), m) in var.iter_mut().zip(f).zip(&mean) {
                *v += (x - m) * (x - m) / n;
            }
        }
        let scale = var
            .into_iter()
            .map(|v| if v > 1e-24 { v.sqrt() } else { 1.0 })
            .collect();
        Self { mean, scale }
    }

    pub fn transform(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.mean)
            .zip(&self.scale)
            .map(|((x, m), s)| (x - m) / s)
            .collect()
    }
}
