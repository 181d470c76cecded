//! One-vs-rest node classification on raw embeddings.

use std::collections::HashMap;
use std::io::BufRead;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::f1;
use super::logistic::{train_logistic, Standardizer};
use crate::error::{Error, Result};
use crate::graph::IdMap;
use crate::params::EmbeddingTable;

pub const CLASSIFIER_EPOCHS: usize = 300;
pub const CLASSIFIER_LR: f64 = 0.5;

/// Vertex label sets. Class ids index `classes`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct NodeLabels {
    pub classes: Vec<String>,
    pub vertices: Vec<(usize, Vec<usize>)>,
}

/// Parses `<vertex-label> <class> [<class> …]` lines against `ids`.
pub fn load_labels<R: BufRead>(source: R, ids: &IdMap) -> Result<NodeLabels> {
    let mut classes: Vec<String> = Vec::new();
    let mut class_index: HashMap<String, usize> = HashMap::new();
    let mut per_vertex: HashMap<usize, Vec<usize>> = HashMap::new();
    let mut order = Vec::new();
    for (i, line) in source.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split_whitespace();
        let vertex = fields.next().unwrap();
        let v = ids.index_of(vertex).ok_or_else(|| Error::Parse {
            line: i + 1,
            message: format!("vertex {vertex:?} has no embedding"),
        })?;
        let mut any = false;
        for class in fields {
            any = true;
            let c = *class_index.entry(class.to_owned()).or_insert_with(|| {
                classes.push(class.to_owned());
                classes.len() - 1
            });
            let set = per_vertex.entry(v).or_insert_with(|| {
                order.push(v);
                Vec::new()
            });
            if !set.contains(&c) {
                set.push(c);
            }
        }
        if !any {
            return Err(Error::Parse {
                line: i + 1,
                message: "vertex without class labels".into(),
            });
        }
    }
    let vertices = order
        .into_iter()
        .map(|v| {
            let mut set = per_vertex.remove(&v).unwrap();
            set.sort_unstable();
            (v, set)
        })
        .collect();
    Ok(NodeLabels { classes, vertices })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    /// Fraction of test vertices whose top-1 class is one of their labels.
    pub accuracy: f64,
    pub macro_f1: f64,
    /// Classes left out of the macro average (no training example).
    pub excluded_classes: Vec<String>,
    pub test_vertices: usize,
}

/// Shuffles labelled vertices, trains one logistic model per class on the
/// first `train_fraction`, predicts the argmax class on the rest.
pub fn node_classification_eval(
    embeddings: &EmbeddingTable,
    labels: &NodeLabels,
    train_fraction: f64,
    seed: u64,
) -> Result<ClassMetrics> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::Config(format!(
            "train fraction {train_fraction} is not in (0, 1)"
        )));
    }
    for &(v, _) in &labels.vertices {
        if v >= embeddings.rows() {
            return Err(Error::InvalidVertex(v));
        }
    }
    let mut items = labels.vertices.clone();
    items.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_train = ((items.len() as f64 * train_fraction).round() as usize).clamp(1, items.len() - 1);
    let (train, test) = items.split_at(n_train);

    let raw: Vec<Vec<f64>> = train.iter().map(|(v, _)| embeddings.row(*v).to_vec()).collect();
    let scaler = Standardizer::fit(&raw);
    let features: Vec<Vec<f64>> = raw.iter().map(|x| scaler.transform(x)).collect();

    let n_classes = labels.classes.len();
    let mut excluded = Vec::new();
    let mut models = Vec::with_capacity(n_classes);
    for c in 0..n_classes {
        let y: Vec<bool> = train.iter().map(|(_, set)| set.contains(&c)).collect();
        if !y.iter().any(|&b| b) {
            log::warn!("class {:?} has no training examples", labels.classes[c]);
            excluded.push(c);
            models.push(None);
            continue;
        }
        models.push(Some(train_logistic(&features, &y, CLASSIFIER_EPOCHS, CLASSIFIER_LR)?));
    }

    let mut tp = vec![0usize; n_classes];
    let mut fp = vec![0usize; n_classes];
    let mut fn_ = vec![0usize; n_classes];
    let mut correct = 0;
    for (v, set) in test {
        let x = scaler.transform(embeddings.row(*v));
        let predicted = models
            .iter()
            .enumerate()
            .filter_map(|(c, m)| m.as_ref().map(|m| (c, m.probability(&x))))
            .max_by(|a, b| a.1.total_cmp(&b.1).then(b.0.cmp(&a.0)))
            .map(|(c, _)| c)
            .ok_or_else(|| Error::Data("no class has training examples".into()))?;
        if set.contains(&predicted) {
            correct += 1;
            tp[predicted] += 1;
        } else {
            fp[predicted] += 1;
        }
        for &c in set {
            if c != predicted {
                fn_[c] += 1;
            }
        }
    }
    let scored: Vec<f64> = (0..n_classes)
        .filter(|c| models[*c].is_some() && tp[*c] + fp[*c] + fn_[*c] > 0)
        .map(|c| f1(tp[c], fp[c], fn_[c]))
        .collect();
    let macro_f1 = if scored.is_empty() {
        0.0
    } else {
        scored.iter().sum::<f64>() / scored.len() as f64
    };
    Ok(ClassMetrics {
        accuracy: correct as f64 / test.len() as f64,
        macro_f1,
        excluded_classes: excluded.into_iter().map(|c| labels.classes[c].clone()).collect(),
        test_vertices: test.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn parses_multi_label_lines() {
        let ids = IdMap::from_labels(vec!["a".into(), "b".into()]).unwrap();
        let l = load_labels("a x y\nb y\n# c z\n".as_bytes(), &ids).unwrap();
        assert_eq!(l.classes, vec!["x", "y"]);
        assert_eq!(l.vertices, vec![(0, vec![0, 1]), (1, vec![1])]);
        assert!(load_labels("zz x\n".as_bytes(), &ids).is_err());
        assert!(load_labels("a\n".as_bytes(), &ids).is_err());
    }

    fn one_hot(n: usize, classes: usize) -> (EmbeddingTable, NodeLabels) {
        let rows = (0..n)
            .map(|v| (0..classes).map(|c| f64::from(u8::from(v % classes == c))).collect())
            .collect();
        let labels = NodeLabels {
            classes: (0..classes).map(|c| format!("c{c}")).collect(),
            vertices: (0..n).map(|v| (v, vec![v % classes])).collect(),
        };
        (EmbeddingTable::from_rows(rows).unwrap(), labels)
    }

    #[test]
    fn one_hot_embeddings_classify_perfectly() {
        let (emb, labels) = one_hot(40, 2);
        let m = node_classification_eval(&emb, &labels, 0.9, 1).unwrap();
        assert_eq!(m.accuracy, 1.0);
        assert_eq!(m.macro_f1, 1.0);
        assert_eq!(m.test_vertices, 4);
    }

    #[test]
    fn shuffled_labels_are_near_chance() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let classes = 4;
        let n = 4000;
        let rows = (0..n).map(|_| (0..8).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        let labels = NodeLabels {
            classes: (0..classes).map(|c| format!("c{c}")).collect(),
            vertices: (0..n).map(|v| (v, vec![rng.gen_range(0..classes)])).collect(),
        };
        let emb = EmbeddingTable::from_rows(rows).unwrap();
        let m = node_classification_eval(&emb, &labels, 0.5, 2).unwrap();
        assert!((m.accuracy - 0.25).abs() < 0.05, "{}", m.accuracy);
        assert!(m.macro_f1 <= 1.0);
    }

    #[test]
    fn class_without_training_examples_is_excluded() {
        let (emb, mut labels) = one_hot(20, 2);
        labels.classes.push("rare".into());
        // every vertex stays in its class; "rare" only on a vertex that may land in test
        let m = node_classification_eval(&emb, &labels, 0.8, 0).unwrap();
        assert_eq!(m.excluded_classes, vec!["rare".to_string()]);
    }
}
