use std::io::BufRead;

use super::{Graph, IdMap};
use crate::error::{Error, Result};

/// Options for edge-list ingestion.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LoadOptions {
    /// Skip lines whose weight (third column) is below this value. Lines
    /// without a weight are always kept.
    pub min_rating: Option<f64>,
}

/// A user/item graph: the left column of the source file is the user side.
#[derive(Debug, Clone)]
pub struct Bipartite {
    pub graph: Graph,
    pub is_user: Vec<bool>,
}

impl Bipartite {
    pub fn users(&self) -> impl Iterator<Item = usize> + '_ {
        self.is_user
            .iter()
            .enumerate()
            .filter(|(_, &u)| u)
            .map(|(v, _)| v)
    }

    pub fn items(&self) -> impl Iterator<Item = usize> + '_ {
        self.is_user
            .iter()
            .enumerate()
            .filter(|(_, &u)| !u)
            .map(|(v, _)| v)
    }
}

pub(crate) const USER_PREFIX: &str = "u:";
pub(crate) const ITEM_PREFIX: &str = "i:";

struct Record<'a> {
    left: &'a str,
    right: &'a str,
    weight: Option<f64>,
}

fn parse_line(line: &str, number: usize) -> Result<Option<Record<'_>>> {
    let line = line.trim();
    if line.is_empty() || line.starts_with('#') {
        return Ok(None);
    }
    let mut fields: Vec<&str> = if line.contains("::") {
        line.split("::").map(str::trim).collect()
    } else {
        line.split_whitespace().collect()
    };
    fields.retain(|f| !f.is_empty());
    if fields.len() < 2 {
        return Err(Error::Parse {
            line: number,
            message: format!("expected two vertex labels, found {:?}", line),
        });
    }
    let weight = match fields.get(2) {
        Some(w) => Some(w.parse::<f64>().map_err(|_| Error::Parse {
            line: number,
            message: format!("weight {w:?} is not a number"),
        })?),
        None => None,
    };
    Ok(Some(Record {
        left: fields[0],
        right: fields[1],
        weight,
    }))
}

fn keep(record: &Record<'_>, options: &LoadOptions) -> bool {
    match (options.min_rating, record.weight) {
        (Some(min), Some(w)) => w >= min,
        _ => true,
    }
}

/// Reads an undirected edge list: `<label> <label> [weight] [ignored…]` per
/// line, `#` comments. MovieLens-style `::` separators are accepted too.
/// Labels are assigned dense indices in order of first appearance.
pub fn load_edge_list<R: BufRead>(source: R, options: &LoadOptions) -> Result<Graph> {
    let mut ids = IdMap::new();
    let mut edges = Vec::new();
    for (i, line) in source.lines().enumerate() {
        let line = line?;
        let Some(record) = parse_line(&line, i + 1)? else {
            continue;
        };
        if !keep(&record, options) {
            continue;
        }
        let u = ids.get_or_insert(record.left);
        let v = ids.get_or_insert(record.right);
        edges.push((u, v));
    }
    let graph = Graph::from_labeled_edges(ids, edges)?;
    if graph.edge_count() == 0 {
        return Err(Error::EmptyGraph);
    }
    Ok(graph)
}

/// Reads a user/item rating list. Users are labelled `u:<id>` and items
/// `i:<id>` so the two id spaces cannot collide.
pub fn load_bipartite_edge_list<R: BufRead>(source: R, options: &LoadOptions) -> Result<Bipartite> {
    let mut ids = IdMap::new();
    let mut is_user = Vec::new();
    let mut edges = Vec::new();
    let mut intern = |ids: &mut IdMap, label: String, user: bool| {
        let before = ids.len();
        let v = ids.get_or_insert(&label);
        if ids.len() > before {
            is_user.push(user);
        }
        v
    };
    for (i, line) in source.lines().enumerate() {
        let line = line?;
        let Some(record) = parse_line(&line, i + 1)? else {
            continue;
        };
        if !keep(&record, options) {
            continue;
        }
        let u = intern(&mut ids, format!("{USER_PREFIX}{}", record.left), true);
        let m = intern(&mut ids, format!("{ITEM_PREFIX}{}", record.right), false);
        edges.push((u, m));
    }
    let graph = Graph::from_labeled_edges(ids, edges)?;
    if graph.edge_count() == 0 {
        return Err(Error::EmptyGraph);
    }
    Ok(Bipartite { graph, is_user })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicate_edges_collapse() {
        let g = load_edge_list("a b\nb c\na b\n".as_bytes(), &LoadOptions::default()).unwrap();
        assert_eq!(g.vertex_count(), 3);
        assert_eq!(g.edge_count(), 2);
        assert_eq!(g.ids().index_of("c"), Some(2));
    }

    #[test]
    fn rating_threshold_filters_lines() {
        let text = "u1 m7 5\nu1 m9 3\nu2 m7 4\n";
        let opts = LoadOptions {
            min_rating: Some(4.0),
        };
        let g = load_edge_list(text.as_bytes(), &opts).unwrap();
        assert_eq!(g.edge_count(), 2);
        assert_eq!(g.ids().index_of("m9"), None);
    }

    #[test]
    fn comments_blank_lines_and_self_loops() {
        let text = "# header\n\n a a\na b\n";
        let g = load_edge_list(text.as_bytes(), &LoadOptions::default()).unwrap();
        assert_eq!(g.vertex_count(), 2);
        assert_eq!(g.edge_count(), 1);
    }

    #[test]
    fn malformed_line_reports_number() {
        let err = load_edge_list("a b\nlonely\n".as_bytes(), &LoadOptions::default()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
        let err = load_edge_list("a b x\n".as_bytes(), &LoadOptions::default()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
    }

    #[test]
    fn empty_input_is_an_error() {
        let err = load_edge_list("# nothing\n".as_bytes(), &LoadOptions::default()).unwrap_err();
        assert!(matches!(err, Error::EmptyGraph));
    }

    #[test]
    fn movielens_separator_and_sides() {
        let text = "1::10::5::978300760\n1::11::2::978300761\n2::10::4::978300762\n";
        let opts = LoadOptions {
            min_rating: Some(4.0),
        };
        let b = load_bipartite_edge_list(text.as_bytes(), &opts).unwrap();
        assert_eq!(b.graph.edge_count(), 2);
        assert_eq!(b.users().count(), 2);
        assert_eq!(b.items().count(), 1);
        let u = b.graph.ids().index_of("u:1").unwrap();
        assert!(b.is_user[u]);
        let m = b.graph.ids().index_of("i:10").unwrap();
        assert!(!b.is_user[m]);
    }
}
