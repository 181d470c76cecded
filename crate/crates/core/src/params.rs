//! Embedding tables and their text serialization.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use rand::distributions::{Distribution, Uniform};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::{Graph, IdMap};

/// Dense `V × k` matrix of vertex embeddings, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    data: Vec<f64>,
}

impl EmbeddingTable {
    pub fn zeros(rows: usize, dim: usize) -> Self {
        Self {
            dim,
            data: vec![0.0; rows * dim],
        }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * dim);
        for row in rows {
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: row.len(),
                });
            }
            data.extend(row);
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::non_finite("embedding rows"));
        }
        Ok(Self { dim, data })
    }

    pub fn rows(&self) -> usize {
        if self.dim == 0 {
            0
        } else {
            self.data.len() / self.dim
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, v: usize) -> &[f64] {
        &self.data[v * self.dim..(v + 1) * self.dim]
    }

    pub fn row_mut(&mut self, v: usize) -> &mut [f64] {
        &mut self.data[v * self.dim..(v + 1) * self.dim]
    }

    pub fn dot(&self, u: usize, v: usize) -> f64 {
        dot(self.row(u), self.row(v))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// `self += scale * grad`, refusing to write anything if a single
    /// resulting entry would be non-finite.
    pub fn apply(&mut self, grad: &SparseGrad, scale: f64) -> Result<()> {
        for (&v, g) in &grad.rows {
            let row = self.row(v);
            if row.iter().zip(g).any(|(x, d)| !(x + scale * d).is_finite()) {
                return Err(Error::non_finite(format!("update of row {v}")));
            }
        }
        for (&v, g) in &grad.rows {
            for (x, d) in self.row_mut(v).iter_mut().zip(g) {
                *x += scale * d;
            }
        }
        Ok(())
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Gradient restricted to a few embedding rows. Iteration is in ascending
/// row order, so accumulating into it is deterministic.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SparseGrad {
    dim: usize,
    rows: BTreeMap<usize, Vec<f64>>,
}

impl SparseGrad {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            rows: BTreeMap::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `row[v] += scale * values`.
    pub fn add(&mut self, v: usize, scale: f64, values: &[f64]) {
        let dim = self.dim;
        let row = self.rows.entry(v).or_insert_with(|| vec![0.0; dim]);
        for (r, x) in row.iter_mut().zip(values) {
            *r += scale * x;
        }
    }

    /// `self += scale * other`.
    pub fn merge(&mut self, other: &SparseGrad, scale: f64) {
        for (&v, values) in &other.rows {
            self.add(v, scale, values);
        }
    }

    pub fn row(&self, v: usize) -> Option<&[f64]> {
        self.rows.get(&v).map(Vec::as_slice)
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &[f64])> {
        self.rows.iter().map(|(&v, r)| (v, r.as_slice()))
    }

    /// Rows with at least one nonzero entry.
    pub fn nonzero_rows(&self) -> impl Iterator<Item = usize> + '_ {
        self.rows
            .iter()
            .filter(|(_, r)| r.iter().any(|&x| x != 0.0))
            .map(|(&v, _)| v)
    }

    pub fn touched_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn is_finite(&self) -> bool {
        self.rows.values().flatten().all(|x| x.is_finite())
    }
}

/// Table with entries i.i.d. uniform on `[-0.5/k, 0.5/k]`.
pub fn init_table(rows: usize, dim: usize, seed: u64) -> EmbeddingTable {
    assert!(rows >= 1 && dim >= 1, "table must be at least 1x1");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bound = 0.5 / dim as f64;
    let dist = Uniform::new_inclusive(-bound, bound);
    EmbeddingTable {
        dim,
        data: (0..rows * dim).map(|_| dist.sample(&mut rng)).collect(),
    }
}

/// Fits `σ(x_u · x_v)` to 1 on every edge and to 0 on one uniformly drawn
/// non-edge per edge, one full-batch ascent step per epoch.
pub fn pretrain(
    table: &mut EmbeddingTable,
    graph: &Graph,
    epochs: usize,
    learning_rate: f64,
    seed: u64,
) -> Result<()> {
    let n = graph.vertex_count();
    if n < 2 {
        return Ok(());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for epoch in 0..epochs {
        let mut grad = SparseGrad::new(table.dim());
        for (u, v) in graph.edges() {
            let s = sigmoid(table.dot(u, v));
            grad.add(u, 1.0 - s, table.row(v));
            grad.add(v, 1.0 - s, table.row(u));
            // rejection-sample a non-edge touching u
            for _ in 0..32 {
                let w = rng.gen_range(0..n);
                if w != u && !graph.has_edge(u, w) {
                    let s = sigmoid(table.dot(u, w));
                    grad.add(u, -s, table.row(w));
                    grad.add(w, -s, table.row(u));
                    break;
                }
            }
        }
        table
            .apply(&grad, learning_rate)
            .map_err(|e| Error::non_finite(format!("pretraining epoch {epoch}: {e}")))?;
    }
    Ok(())
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Writes `V k` followed by `<label> <f_1> … <f_k>` per row. Values use the
/// shortest representation that parses back to the same `f64`.
pub fn export_embeddings<W: Write>(table: &EmbeddingTable, ids: &IdMap, mut sink: W) -> Result<()> {
    if ids.len() != table.rows() {
        return Err(Error::DimensionMismatch {
            expected: table.rows(),
            found: ids.len(),
        });
    }
    if !table.is_finite() {
        return Err(Error::non_finite("exported table"));
    }
    writeln!(sink, "{} {}", table.rows(), table.dim())?;
    let mut line = String::new();
    for v in 0..table.rows() {
        line.clear();
        line.push_str(ids.label(v));
        for x in table.row(v) {
            line.push(' ');
            line.push_str(&x.to_string());
        }
        writeln!(sink, "{line}")?;
    }
    sink.flush()?;
    Ok(())
}

pub fn import_embeddings<R: BufRead>(source: R) -> Result<(EmbeddingTable, IdMap)> {
    let mut lines = source.lines().enumerate();
    let (rows, dim) = loop {
        let Some((i, line)) = lines.next() else {
            return Err(Error::Parse {
                line: 1,
                message: "missing header".into(),
            });
        };
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let parsed = match fields.as_slice() {
            [r, k] => r.parse::<usize>().ok().zip(k.parse::<usize>().ok()),
            _ => None,
        };
        break parsed.ok_or_else(|| Error::Parse {
            line: i + 1,
            message: format!("expected header `V k`, found {line:?}"),
        })?;
    };
    let mut labels = Vec::with_capacity(rows);
    let mut data = Vec::with_capacity(rows * dim);
    for (i, line) in lines {
        let line = line?;
        let mut fields = line.split_whitespace();
        let Some(label) = fields.next() else {
            continue;
        };
        let values = fields
            .map(|f| {
                f.parse::<f64>().map_err(|_| Error::Parse {
                    line: i + 1,
                    message: format!("{f:?} is not a number"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        if values.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: values.len(),
            });
        }
        labels.push(label.to_owned());
        data.extend(values);
    }
    if labels.len() != rows {
        return Err(Error::DimensionMismatch {
            expected: rows,
            found: labels.len(),
        });
    }
    if data.iter().any(|x| !x.is_finite()) {
        return Err(Error::non_finite("imported table"));
    }
    Ok((EmbeddingTable { dim, data }, IdMap::from_labels(labels)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn init_is_deterministic_and_bounded() {
        assert_eq!(init_table(3, 2, 7), init_table(3, 2, 7));
        assert_ne!(init_table(3, 2, 7), init_table(3, 2, 8));
        let t = init_table(50, 20, 1);
        assert!(t.as_slice().iter().all(|x| x.abs() <= 0.025));
        assert_eq!(t.rows(), 50);
        assert_eq!(t.dim(), 20);
    }

    #[test]
    fn export_format() {
        let t = EmbeddingTable::zeros(1, 2);
        let ids = IdMap::from_labels(vec!["a".into()]).unwrap();
        let mut out = Vec::new();
        export_embeddings(&t, &ids, &mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "1 2\na 0 0\n");
    }

    #[test]
    fn header_row_mismatch_is_rejected() {
        let err = import_embeddings("2 3\na 1 2\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { expected: 3, found: 2 }));
        let err = import_embeddings("2 2\na 1 2\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { expected: 2, found: 1 }));
    }

    #[test]
    fn apply_refuses_non_finite() {
        let mut t = EmbeddingTable::zeros(2, 1);
        let mut g = SparseGrad::new(1);
        g.add(0, 1.0, &[1.0]);
        g.add(1, 1.0, &[f64::INFINITY]);
        assert!(t.apply(&g, 0.5).is_err());
        assert_eq!(t, EmbeddingTable::zeros(2, 1));
    }

    #[test]
    fn pretraining_separates_edges_from_non_edges() {
        let g = Graph::from_edges(6, [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)]).unwrap();
        let mut t = init_table(6, 4, 3);
        pretrain(&mut t, &g, 300, 0.5, 3).unwrap();
        let edge: f64 = g.edges().map(|(u, v)| t.dot(u, v)).sum::<f64>() / 6.0;
        let cross = (t.dot(0, 3) + t.dot(1, 4) + t.dot(2, 5)) / 3.0;
        assert!(edge > cross, "{edge} <= {cross}");
        assert!(t.is_finite());
    }

    proptest! {
        #[test]
        fn export_import_round_trip(rows in 1usize..6, dim in 1usize..5, values in proptest::collection::vec(-1e6f64..1e6, 30)) {
            let data: Vec<Vec<f64>> = (0..rows)
                .map(|r| (0..dim).map(|c| values[(r * dim + c) % values.len()] / 7.0).collect())
                .collect();
            let table = EmbeddingTable::from_rows(data).unwrap();
            let ids = IdMap::numeric(rows);
            let mut out = Vec::new();
            export_embeddings(&table, &ids, &mut out).unwrap();
            let (back, back_ids) = import_embeddings(out.as_slice()).unwrap();
            prop_assert_eq!(back, table);
            prop_assert_eq!(back_ids, ids);
        }
    }
}
