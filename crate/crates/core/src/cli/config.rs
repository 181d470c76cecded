//! `key = value` run configuration files and the resolved settings they feed.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trainer::TrainConfig;

/// Everything a run needs besides input paths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Settings {
    pub train: TrainConfig,
    /// Fraction of edges hidden for link prediction and recommendation.
    pub holdout: f64,
    /// Fraction of labelled vertices used to fit the node classifier.
    pub train_fraction: f64,
    pub k_list: Vec<usize>,
    /// Ratings below this are dropped before a recommendation split.
    pub min_rating: f64,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            train: TrainConfig::default(),
            holdout: 0.1,
            train_fraction: 0.9,
            k_list: vec![1, 2, 5, 10, 20],
            min_rating: 4.0,
        }
    }
}

/// Parses `key = value` lines; `#` starts a comment. Keys are normalized to
/// snake case so `samples-s` and `samples_s` are the same key.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>> {
    let mut entries = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
            line: i + 1,
            message: format!("expected `key = value`, found {line:?}"),
        })?;
        let key = key.trim().replace('-', "_");
        let value = value.trim();
        if key.is_empty() || value.is_empty() {
            return Err(Error::Parse {
                line: i + 1,
                message: format!("empty key or value in {line:?}"),
            });
        }
        if entries.insert(key.clone(), value.to_owned()).is_some() {
            return Err(Error::Parse {
                line: i + 1,
                message: format!("duplicate key {key:?}"),
            });
        }
    }
    Ok(entries)
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("invalid value {value:?} for {key}")))
}

pub fn parse_k_list(value: &str) -> Result<Vec<usize>> {
    value
        .split(',')
        .map(|k| parse::<usize>("k_list", k.trim()))
        .collect()
}

impl Settings {
    pub fn apply_entries(&mut self, entries: &BTreeMap<String, String>) -> Result<()> {
        let t = &mut self.train;
        for (key, value) in entries {
            match key.as_str() {
                "dim" => t.dim = parse(key, value)?,
                "samples_s" => t.samples_s = parse(key, value)?,
                "samples_t" => {
                    t.samples_t = match value.as_str() {
                        "auto" => None,
                        v => Some(parse(key, v)?),
                    }
                }
                "lr" | "learning_rate" => t.learning_rate = parse(key, value)?,
                "g_steps" => t.g_steps = parse(key, value)?,
                "d_steps" => t.d_steps = parse(key, value)?,
                "iterations" | "max_iterations" => t.max_iterations = parse(key, value)?,
                "pretrain_epochs" => t.pretrain_epochs = parse(key, value)?,
                "seed" => t.seed = parse(key, value)?,
                "convergence_tol" => t.convergence_tol = parse(key, value)?,
                "convergence_window" => t.convergence_window = parse(key, value)?,
                "holdout" => self.holdout = parse(key, value)?,
                "train_fraction" => self.train_fraction = parse(key, value)?,
                "k_list" => self.k_list = parse_k_list(value)?,
                "min_rating" => self.min_rating = parse(key, value)?,
                other => return Err(Error::Config(format!("unknown config key {other:?}"))),
            }
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        self.apply_entries(&parse_config(&text)?)
    }
}
