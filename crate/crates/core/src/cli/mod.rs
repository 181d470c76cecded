//! Command-line front end: `train`, `eval`, `pipeline` and `rerun`.
//!
//! Run directories are assembled in a sibling staging directory and only
//! moved into place once every stage has succeeded.

pub mod config;

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

pub use config::Settings;

use crate::error::{Error, Result};
use crate::eval::{
    distance::BUCKET_HEADER, distance_study, link_prediction_eval, load_labels,
    node_classification_eval, recommendation_eval, split_edges, split_ratings, BinaryMetrics,
    ClassMetrics, RankingResult,
};
use crate::graph::{load_bipartite_edge_list, load_edge_list, Forest, Graph, IdMap, LoadOptions};
use crate::params::{export_embeddings, import_embeddings, EmbeddingTable};
use crate::trainer::{derive_seed, train_with_forest, TrainOutput, METRICS_HEADER};

pub const GENERATOR_FILE: &str = "generator_embeddings.txt";
pub const DISCRIMINATOR_FILE: &str = "discriminator_embeddings.txt";
pub const METRICS_FILE: &str = "metrics.csv";
pub const TIMING_FILE: &str = "timing.csv";
pub const RESULTS_FILE: &str = "results.csv";
pub const MANIFEST_FILE: &str = "manifest.json";

/// Seed tags separating the evaluation streams from training.
const SPLIT_TAG: u64 = 100;
const EVAL_TAG: u64 = 101;

#[derive(Debug, Parser)]
#[command(name = "graphgan", version, about = "Adversarial graph embedding toolkit")]
pub struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train embeddings on a whole edge list.
    Train(TrainArgs),
    /// Evaluate embeddings on a downstream task.
    #[command(subcommand)]
    Eval(EvalCommand),
    /// Split, train and evaluate in one reproducible run.
    Pipeline(PipelineArgs),
    /// Repeat the run recorded in a manifest.
    Rerun(RerunArgs),
}

#[derive(Debug, Args)]
pub struct TrainFlags {
    /// `key = value` file; command-line flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub samples_s: Option<usize>,
    /// Positive pairs per root per D-step (default: min(degree, 20)).
    #[arg(long)]
    pub samples_t: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub g_steps: Option<usize>,
    #[arg(long)]
    pub d_steps: Option<usize>,
    #[arg(long)]
    pub iterations: Option<usize>,
    #[arg(long)]
    pub pretrain_epochs: Option<usize>,
    #[arg(long)]
    pub convergence_tol: Option<f64>,
    #[arg(long)]
    pub convergence_window: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Keep at most this many BFS trees in memory, rebuilding the rest on demand.
    #[arg(long)]
    pub tree_cache: Option<usize>,
    /// Write measured seconds into the metrics CSV instead of 0.
    #[arg(long)]
    pub record_wall_time: bool,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub edges: PathBuf,
    /// Treat the input as user/item ratings and train on user roots only.
    #[arg(long)]
    pub bipartite: bool,
    #[arg(long)]
    pub min_rating: Option<f64>,
    #[command(flatten)]
    pub flags: TrainFlags,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Link,
    Rec,
    Nodeclass,
}

#[derive(Debug, Args)]
pub struct PipelineArgs {
    #[arg(long, value_enum)]
    pub task: Task,
    #[arg(long)]
    pub edges: PathBuf,
    #[arg(long)]
    pub labels: Option<PathBuf>,
    #[arg(long)]
    pub holdout: Option<f64>,
    #[arg(long)]
    pub train_fraction: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    pub k_list: Option<Vec<usize>>,
    #[arg(long)]
    pub min_rating: Option<f64>,
    #[command(flatten)]
    pub flags: TrainFlags,
}

#[derive(Debug, Args)]
pub struct RerunArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Destination (default: the directory recorded in the manifest).
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum EvalCommand {
    /// Accuracy and macro-F1 on hidden edges versus non-edges.
    Link(EvalLinkArgs),
    /// One-vs-rest classification of labelled vertices.
    Nodeclass(EvalNodeclassArgs),
    /// Precision@K and recall@K over hidden ratings.
    Rec(EvalRecArgs),
    /// Edge probability by shortest distance over sampled pairs.
    DistStudy(EvalDistArgs),
}

#[derive(Debug, Args)]
pub struct EvalLinkArgs {
    #[arg(long)]
    pub embeddings: PathBuf,
    /// Full edge list; the split is regenerated from `--seed`.
    #[arg(long)]
    pub edges: PathBuf,
    #[arg(long, default_value_t = 0.1)]
    pub holdout: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalNodeclassArgs {
    #[arg(long)]
    pub embeddings: PathBuf,
    #[arg(long)]
    pub labels: PathBuf,
    #[arg(long, default_value_t = 0.9)]
    pub train_fraction: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalRecArgs {
    #[arg(long)]
    pub embeddings: PathBuf,
    /// Full rating list; the split is regenerated from `--seed`.
    #[arg(long)]
    pub edges: PathBuf,
    #[arg(long, default_value_t = 0.1)]
    pub holdout: f64,
    #[arg(long, default_value_t = 4.0)]
    pub min_rating: f64,
    #[arg(long, value_delimiter = ',', default_values_t = [1, 2, 5, 10, 20])]
    pub k_list: Vec<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalDistArgs {
    #[arg(long)]
    pub edges: PathBuf,
    #[arg(long, default_value_t = 1_000_000)]
    pub pairs: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// What to run, with every default resolved. Re-running a spec reproduces
/// its outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSpec {
    pub command: String,
    pub task: Option<Task>,
    pub edges: PathBuf,
    pub labels: Option<PathBuf>,
    pub bipartite: bool,
    pub settings: Settings,
    pub tree_cache: Option<usize>,
    pub record_wall_time: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    pub run: RunSpec,
    pub out_dir: PathBuf,
    /// Artifact role to file name inside `out_dir`.
    pub artifacts: BTreeMap<String, String>,
    pub iterations_run: usize,
    pub converged: bool,
    pub threads: Option<usize>,
    pub started_unix: f64,
    pub finished_unix: f64,
}

fn unix_now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::Config(format!("cannot open {}: {e}", path.display())))
}

fn absolute(path: &Path) -> Result<PathBuf> {
    std::fs::canonicalize(path)
        .map_err(|e| Error::Config(format!("cannot open {}: {e}", path.display())))
}

fn resolve_settings(flags: &TrainFlags) -> Result<Settings> {
    let mut s = Settings::default();
    if let Some(path) = &flags.config {
        s.apply_file(path)?;
    }
    let t = &mut s.train;
    macro_rules! set {
        ($flag:ident => $field:expr) => {
            if let Some(v) = flags.$flag {
                $field = v;
            }
        };
    }
    set!(dim => t.dim);
    set!(samples_s => t.samples_s);
    set!(lr => t.learning_rate);
    set!(g_steps => t.g_steps);
    set!(d_steps => t.d_steps);
    set!(iterations => t.max_iterations);
    set!(pretrain_epochs => t.pretrain_epochs);
    set!(convergence_tol => t.convergence_tol);
    set!(convergence_window => t.convergence_window);
    set!(seed => t.seed);
    if flags.samples_t.is_some() {
        t.samples_t = flags.samples_t;
    }
    t.validate()?;
    Ok(s)
}

/// Files written to a hidden sibling of the destination and moved there
/// only on [`Staging::commit`]. Dropping without commit removes them.
struct Staging {
    dir: tempfile::TempDir,
    dest: PathBuf,
}

impl Staging {
    fn new(dest: &Path) -> Result<Self> {
        let parent = match dest.parent() {
            Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
            _ => PathBuf::from("."),
        };
        std::fs::create_dir_all(&parent)?;
        let dir = tempfile::Builder::new().prefix(".graphgan-staging-").tempdir_in(&parent)?;
        Ok(Self {
            dir,
            dest: dest.to_path_buf(),
        })
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn commit(self) -> Result<()> {
        std::fs::create_dir_all(&self.dest)?;
        for entry in std::fs::read_dir(self.dir.path())? {
            let entry = entry?;
            std::fs::rename(entry.path(), self.dest.join(entry.file_name()))?;
        }
        Ok(())
    }
}

fn write_file(path: &Path, contents: impl FnOnce(&mut BufWriter<File>) -> Result<()>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    contents(&mut w)?;
    w.flush()?;
    Ok(())
}

/// Writes `text` to `path` through a temporary file in the same directory.
fn write_atomic(path: &Path, text: &str) -> Result<()> {
    let parent = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(parent)?;
    tmp.write_all(text.as_bytes())?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

fn binary_csv(m: &BinaryMetrics) -> String {
    format!("metric,value\naccuracy,{}\nmacro_f1,{}\n", m.accuracy, m.macro_f1)
}

fn class_csv(m: &ClassMetrics) -> String {
    format!("metric,value\naccuracy,{}\nmacro_f1,{}\n", m.accuracy, m.macro_f1)
}

fn ranking_csv(r: &RankingResult) -> String {
    let mut out = String::from("k,precision,recall\n");
    for (i, k) in r.k_list.iter().enumerate() {
        out.push_str(&format!("{k},{},{}\n", r.precision[i], r.recall[i]));
    }
    out
}

fn metrics_csv(output: &TrainOutput, with_time: bool) -> String {
    let mut out = format!("{METRICS_HEADER}\n");
    for m in &output.metrics {
        out.push_str(&m.csv_row(with_time));
        out.push('\n');
    }
    out
}

fn timing_csv(output: &TrainOutput) -> String {
    let mut out = String::from("iteration,wall_time,rows_touched\n");
    for m in &output.metrics {
        out.push_str(&format!("{},{},{}\n", m.iteration, m.wall_time, m.rows_touched));
    }
    out
}

fn train_logged(
    graph: &Graph,
    forest: &Forest,
    settings: &Settings,
) -> Result<TrainOutput> {
    log::info!(
        "training on {} vertices, {} edges, {} roots",
        graph.vertex_count(),
        graph.edge_count(),
        forest.roots().len()
    );
    train_with_forest(graph, forest, &settings.train, |_, _, _| Ok(()))
}

fn build_forest(graph: &Graph, is_user: Option<&[bool]>, cache: Option<usize>) -> Result<Forest> {
    match (is_user, cache) {
        (Some(is_user), _) => {
            if cache.is_some() {
                log::warn!("tree cache is ignored for user/item graphs");
            }
            Forest::build_shortcut(graph, is_user)
        }
        (None, Some(capacity)) => Ok(Forest::lazy(Arc::new(graph.clone()), capacity)),
        (None, None) => Ok(Forest::build(graph)),
    }
}

/// Task-specific outcome of a run, already rendered as CSV.
struct Evaluated {
    results_csv: Option<String>,
}

fn execute(spec: &RunSpec, out_dir: &Path, threads: Option<usize>) -> Result<RunManifest> {
    let started = unix_now();
    let settings = &spec.settings;
    let seed = settings.train.seed;
    let staging = Staging::new(out_dir)?;

    let (output, ids, evaluated) = match (spec.command.as_str(), spec.task) {
        ("train", None) => {
            if spec.bipartite {
                let options = LoadOptions {
                    min_rating: Some(settings.min_rating),
                };
                let data = load_bipartite_edge_list(open(&spec.edges)?, &options)?;
                let forest = build_forest(&data.graph, Some(&data.is_user), spec.tree_cache)?;
                let output = train_logged(&data.graph, &forest, settings)?;
                (output, data.graph.ids().clone(), Evaluated { results_csv: None })
            } else {
                let graph = load_edge_list(open(&spec.edges)?, &LoadOptions::default())?;
                let forest = build_forest(&graph, None, spec.tree_cache)?;
                let output = train_logged(&graph, &forest, settings)?;
                (output, graph.ids().clone(), Evaluated { results_csv: None })
            }
        }
        ("pipeline", Some(Task::Link)) => {
            let graph = load_edge_list(open(&spec.edges)?, &LoadOptions::default())?;
            let split = split_edges(&graph, settings.holdout, derive_seed(seed, &[SPLIT_TAG]))?;
            log::info!("holding out {} edges", split.test_positives.len());
            let forest = build_forest(&split.train_graph, None, spec.tree_cache)?;
            let output = train_logged(&split.train_graph, &forest, settings)?;
            let m = link_prediction_eval(&output.theta_g, &split, derive_seed(seed, &[EVAL_TAG]))?;
            log::info!("link prediction: accuracy {} macro_f1 {}", m.accuracy, m.macro_f1);
            let csv = binary_csv(&m);
            (output, graph.ids().clone(), Evaluated { results_csv: Some(csv) })
        }
        ("pipeline", Some(Task::Rec)) => {
            let options = LoadOptions {
                min_rating: Some(settings.min_rating),
            };
            let data = load_bipartite_edge_list(open(&spec.edges)?, &options)?;
            let split = split_ratings(&data, settings.holdout, derive_seed(seed, &[SPLIT_TAG]))?;
            log::info!("holding out {} ratings", split.hidden.len());
            let forest = build_forest(&split.train.graph, Some(&split.train.is_user), None)?;
            let output = train_logged(&split.train.graph, &forest, settings)?;
            let r = recommendation_eval(&output.theta_g, &split.train, &split.hidden, &settings.k_list)?;
            for (i, k) in r.k_list.iter().enumerate() {
                log::info!("P@{k} {} R@{k} {}", r.precision[i], r.recall[i]);
            }
            let csv = ranking_csv(&r);
            (output, data.graph.ids().clone(), Evaluated { results_csv: Some(csv) })
        }
        ("pipeline", Some(Task::Nodeclass)) => {
            let labels_path = spec
                .labels
                .as_ref()
                .ok_or_else(|| Error::Config("nodeclass needs --labels".into()))?;
            let graph = load_edge_list(open(&spec.edges)?, &LoadOptions::default())?;
            let labels = load_labels(open(labels_path)?, graph.ids())?;
            let forest = build_forest(&graph, None, spec.tree_cache)?;
            let output = train_logged(&graph, &forest, settings)?;
            let m = node_classification_eval(
                &output.theta_g,
                &labels,
                settings.train_fraction,
                derive_seed(seed, &[EVAL_TAG]),
            )?;
            log::info!("node classification: accuracy {} macro_f1 {}", m.accuracy, m.macro_f1);
            let csv = class_csv(&m);
            (output, graph.ids().clone(), Evaluated { results_csv: Some(csv) })
        }
        (command, task) => {
            return Err(Error::Config(format!("cannot run {command:?} with task {task:?}")));
        }
    };

    let mut artifacts = BTreeMap::new();
    write_file(&staging.path(GENERATOR_FILE), |w| export_embeddings(&output.theta_g, &ids, w))?;
    artifacts.insert("generator_embeddings".to_owned(), GENERATOR_FILE.to_owned());
    write_file(&staging.path(DISCRIMINATOR_FILE), |w| {
        export_embeddings(&output.theta_d, &ids, w)
    })?;
    artifacts.insert("discriminator_embeddings".to_owned(), DISCRIMINATOR_FILE.to_owned());
    std::fs::write(staging.path(METRICS_FILE), metrics_csv(&output, spec.record_wall_time))?;
    artifacts.insert("metrics".to_owned(), METRICS_FILE.to_owned());
    std::fs::write(staging.path(TIMING_FILE), timing_csv(&output))?;
    artifacts.insert("timing".to_owned(), TIMING_FILE.to_owned());
    if let Some(csv) = &evaluated.results_csv {
        std::fs::write(staging.path(RESULTS_FILE), csv)?;
        artifacts.insert("results".to_owned(), RESULTS_FILE.to_owned());
    }

    let manifest = RunManifest {
        version: env!("CARGO_PKG_VERSION").to_owned(),
        run: spec.clone(),
        out_dir: out_dir.to_path_buf(),
        artifacts,
        iterations_run: output.metrics.len(),
        converged: output.converged,
        threads,
        started_unix: started,
        finished_unix: unix_now(),
    };
    let json = serde_json::to_string_pretty(&manifest)
        .map_err(|e| Error::Data(format!("cannot serialize manifest: {e}")))?;
    std::fs::write(staging.path(MANIFEST_FILE), json + "\n")?;
    staging.commit()?;
    if let Some(csv) = evaluated.results_csv {
        print!("{csv}");
    }
    Ok(manifest)
}

fn train_spec(args: &TrainArgs) -> Result<RunSpec> {
    let mut settings = resolve_settings(&args.flags)?;
    if let Some(r) = args.min_rating {
        settings.min_rating = r;
    }
    Ok(RunSpec {
        command: "train".into(),
        task: None,
        edges: absolute(&args.edges)?,
        labels: None,
        bipartite: args.bipartite,
        settings,
        tree_cache: args.flags.tree_cache,
        record_wall_time: args.flags.record_wall_time,
    })
}

fn pipeline_spec(args: &PipelineArgs) -> Result<RunSpec> {
    let mut settings = resolve_settings(&args.flags)?;
    if let Some(h) = args.holdout {
        settings.holdout = h;
    }
    if let Some(f) = args.train_fraction {
        settings.train_fraction = f;
    }
    if let Some(k) = &args.k_list {
        settings.k_list = k.clone();
    }
    if let Some(r) = args.min_rating {
        settings.min_rating = r;
    }
    let labels = match (&args.labels, args.task) {
        (Some(p), _) => Some(absolute(p)?),
        (None, Task::Nodeclass) => {
            return Err(Error::Config("nodeclass pipeline needs --labels".into()));
        }
        (None, _) => None,
    };
    Ok(RunSpec {
        command: "pipeline".into(),
        task: Some(args.task),
        edges: absolute(&args.edges)?,
        labels,
        bipartite: args.task == Task::Rec,
        settings,
        tree_cache: args.flags.tree_cache,
        record_wall_time: args.flags.record_wall_time,
    })
}

/// Reorders `table` (rows labelled by `file_ids`) into `graph_ids` order.
pub fn align_embeddings(
    table: &EmbeddingTable,
    file_ids: &IdMap,
    graph_ids: &IdMap,
) -> Result<EmbeddingTable> {
    if file_ids.len() != graph_ids.len() {
        return Err(Error::Data(format!(
            "embeddings cover {} vertices but the graph has {}",
            file_ids.len(),
            graph_ids.len()
        )));
    }
    let rows = graph_ids
        .labels()
        .iter()
        .map(|label| {
            file_ids
                .index_of(label)
                .map(|i| table.row(i).to_vec())
                .ok_or_else(|| Error::Data(format!("vertex {label:?} has no embedding")))
        })
        .collect::<Result<Vec<_>>>()?;
    EmbeddingTable::from_rows(rows)
}

fn emit(csv: &str, out: Option<&Path>) -> Result<()> {
    if let Some(path) = out {
        write_atomic(path, csv)?;
    }
    print!("{csv}");
    Ok(())
}

fn run_eval(command: &EvalCommand) -> Result<()> {
    match command {
        EvalCommand::Link(a) => {
            let graph = load_edge_list(open(&a.edges)?, &LoadOptions::default())?;
            let (table, ids) = import_embeddings(open(&a.embeddings)?)?;
            let table = align_embeddings(&table, &ids, graph.ids())?;
            let split = split_edges(&graph, a.holdout, derive_seed(a.seed, &[SPLIT_TAG]))?;
            let m = link_prediction_eval(&table, &split, derive_seed(a.seed, &[EVAL_TAG]))?;
            emit(&binary_csv(&m), a.out.as_deref())
        }
        EvalCommand::Nodeclass(a) => {
            let (table, ids) = import_embeddings(open(&a.embeddings)?)?;
            let labels = load_labels(open(&a.labels)?, &ids)?;
            let m = node_classification_eval(
                &table,
                &labels,
                a.train_fraction,
                derive_seed(a.seed, &[EVAL_TAG]),
            )?;
            emit(&class_csv(&m), a.out.as_deref())
        }
        EvalCommand::Rec(a) => {
            let options = LoadOptions {
                min_rating: Some(a.min_rating),
            };
            let data = load_bipartite_edge_list(open(&a.edges)?, &options)?;
            let (table, ids) = import_embeddings(open(&a.embeddings)?)?;
            let table = align_embeddings(&table, &ids, data.graph.ids())?;
            let split = split_ratings(&data, a.holdout, derive_seed(a.seed, &[SPLIT_TAG]))?;
            let r = recommendation_eval(&table, &split.train, &split.hidden, &a.k_list)?;
            emit(&ranking_csv(&r), a.out.as_deref())
        }
        EvalCommand::DistStudy(a) => {
            let graph = load_edge_list(open(&a.edges)?, &LoadOptions::default())?;
            let study = distance_study(&graph, a.pairs, a.seed)?;
            log::info!(
                "{} pairs sampled, {} disconnected",
                study.sampled_pairs,
                study.disconnected_pairs
            );
            match &study.fit {
                Some(f) => log::info!(
                    "ln P = {} + {}·distance, R² = {}",
                    f.intercept,
                    f.slope,
                    f.r_squared
                ),
                None => log::warn!("fewer than two distance buckets qualify for a fit"),
            }
            let mut csv = format!("{BUCKET_HEADER}\n");
            for b in &study.buckets {
                csv.push_str(&b.csv_row());
                csv.push('\n');
            }
            emit(&csv, a.out.as_deref())
        }
    }
}

fn read_manifest(path: &Path) -> Result<RunManifest> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read manifest {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| Error::Config(format!("invalid manifest {}: {e}", path.display())))
}

pub fn run(cli: Cli) -> Result<()> {
    let threads = cli.threads;
    let body = move || -> Result<()> {
        match &cli.command {
            Command::Train(args) => {
                let spec = train_spec(args)?;
                execute(&spec, &args.flags.out_dir, threads).map(|_| ())
            }
            Command::Pipeline(args) => {
                let spec = pipeline_spec(args)?;
                execute(&spec, &args.flags.out_dir, threads).map(|_| ())
            }
            Command::Rerun(args) => {
                let manifest = read_manifest(&args.manifest)?;
                let out = args.out_dir.clone().unwrap_or(manifest.out_dir);
                execute(&manifest.run, &out, threads).map(|_| ())
            }
            Command::Eval(command) => run_eval(command),
        }
    };
    match threads {
        Some(0) => Err(Error::Config("--threads must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config(format!("cannot start thread pool: {e}")))?
            .install(body),
        None => body(),
    }
}
