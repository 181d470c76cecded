//! Downstream evaluation protocols.

pub mod distance;
pub mod link;
pub mod logistic;
pub mod nodeclass;
pub mod recommend;

pub use distance::{distance_study, distance_table, DistanceBucket, DistanceStudy};
pub use link::{hadamard, link_prediction_eval, split_edges, LinkSplit};
pub use logistic::{train_logistic, train_logistic_traced, LogisticModel, Standardizer};
pub use nodeclass::{load_labels, node_classification_eval, ClassMetrics, NodeLabels};
pub use recommend::{recommendation_eval, split_ratings, RankingResult, RecSplit, UserRanking};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinaryMetrics {
    pub accuracy: f64,
    /// Mean of the F1 scores of the positive and the negative class.
    pub macro_f1: f64,
}

/// `2·tp / (2·tp + fp + fn)`, 0 when the class never occurs nor is predicted.
pub fn f1(tp: usize, fp: usize, fn_: usize) -> f64 {
    let denom = 2 * tp + fp + fn_;
    if denom == 0 {
        0.0
    } else {
        2.0 * tp as f64 / denom as f64
    }
}

impl BinaryMetrics {
    pub fn from_predictions(truth: &[bool], predicted: &[bool]) -> Self {
        let mut tp = 0;
        let mut tn = 0;
        let mut fp = 0;
        let mut fn_ = 0;
        for (&t, &p) in truth.iter().zip(predicted) {
            match (t, p) {
                (true, true) => tp += 1,
                (false, false) => tn += 1,
                (false, true) => fp += 1,
                (true, false) => fn_ += 1,
            }
        }
        let n = truth.len().max(1) as f64;
        Self {
            accuracy: (tp + tn) as f64 / n,
            macro_f1: (f1(tp, fp, fn_) + f1(tn, fn_, fp)) / 2.0,
        }
    }
}

/// Ordinary least squares line with its coefficient of determination.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// `None` with fewer than two points or no spread in `x`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Option<LinearFit> {
    let n = xs.len();
    if n < 2 || n != ys.len() {
        return None;
    }
    let mx = xs.iter().sum::<f64>() / n as f64;
    let my = ys.iter().sum::<f64>() / n as f64;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        let ss_res: f64 = xs
            .iter()
            .zip(ys)
            .map(|(x, y)| {
                let e = y - (intercept + slope * x);
                e * e
            })
            .sum();
        1.0 - ss_res / syy
    };
    Some(LinearFit {
        slope,
        intercept,
        r_squared,
    })
}
