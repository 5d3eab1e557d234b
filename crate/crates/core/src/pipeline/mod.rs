//! Stage functions shared by the CLI subcommands, and the end-to-end run.
//!
//! Each subcommand calls exactly one of the stage functions below, and
//! [`run_pipeline`] chains the same functions, so running the subcommands
//! by hand produces the same artifacts as `run`.

mod config;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

pub use config::{PipelineConfig, DEFAULT_SEED};

use crate::centrality::raw_features;
use crate::character::CharacterId;
use crate::error::{Error, Result};
use crate::evaluation::{evaluate_outcomes, rank_living, repeated_cv, CvConfig, CvOutcome, OutcomeEvaluation, PredictionReport};
use crate::graph::{build_graph, export_graph, filter_min_degree, ExportFormat, SocialGraph};
use crate::ingest::{parse_str, to_scene_records, to_scene_records_strict, AliasTable, SceneRecord};
use crate::io;
use crate::model::{train_svm, LabeledDataset, SvmModel, TrainOptions};
use crate::FeatureMatrix;

pub fn load_aliases(path: Option<&Path>) -> Result<AliasTable> {
    match path {
        Some(p) => AliasTable::from_csv(io::read_text(p)?.as_bytes()),
        None => Ok(AliasTable::new()),
    }
}

pub fn load_scenes(path: &Path, aliases: &AliasTable, strict: bool) -> Result<Vec<SceneRecord>> {
    let raw = parse_str(&io::read_text(path)?).map_err(|e| match e {
        Error::Parse { line, message } => Error::format(path.display().to_string(), format!("line {line}: {message}")),
        other => other,
    })?;
    if strict {
        to_scene_records_strict(&raw, aliases)
    } else {
        Ok(to_scene_records(&raw, aliases))
    }
}

/// Export of the (optionally degree-filtered) graph. House attributes for
/// nodes that did not survive the filter are dropped.
pub fn graph_export(
    graph: &SocialGraph,
    min_degree: usize,
    format: ExportFormat,
    houses: Option<&crate::graph::NodeAttrs>,
) -> Result<String> {
    let filtered = filter_min_degree(graph, min_degree);
    let attrs = houses.map(|h| {
        h.iter()
            .filter(|(k, _)| filtered.contains(k))
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect::<BTreeMap<_, _>>()
    });
    export_graph(&filtered, format, attrs.as_ref())
}

/// Raw features CSV for `roster` on the full graph.
pub fn features_csv(graph: &SocialGraph, roster: &[CharacterId]) -> Result<String> {
    if roster.is_empty() {
        return Err(Error::Config("roster is empty".into()));
    }
    let rows = raw_features(graph, roster)?;
    io::write_features(roster, &rows)
}

/// Joins a raw feature table with labels, in feature-table order. Every
/// labeled character must have a feature row; unlabeled rows are skipped.
pub fn labeled_dataset(features: &FeatureMatrix, labels: &[(CharacterId, bool)]) -> Result<LabeledDataset> {
    let index: BTreeMap<&CharacterId, usize> = features.roster.iter().enumerate().map(|(i, c)| (c, i)).collect();
    let label_map: BTreeMap<&CharacterId, bool> = labels.iter().map(|(c, d)| (c, *d)).collect();
    if let Some((missing, _)) = labels.iter().find(|(c, _)| !index.contains_key(c)) {
        return Err(Error::UnknownCharacter(missing.clone(), "features"));
    }
    let mut keep = Vec::new();
    let mut flags = Vec::new();
    for (i, id) in features.roster.iter().enumerate() {
        match label_map.get(id) {
            Some(&dead) => {
                keep.push(i);
                flags.push(dead);
            }
            None => log::warn!("{id} has features but no label; skipped"),
        }
    }
    LabeledDataset::new(features.subset(&keep), flags)
}

pub fn train_model(data: &LabeledDataset, opts: &TrainOptions) -> Result<SvmModel> {
    train_svm(data, opts)
}

pub fn predict(data: &LabeledDataset, cfg: &CvConfig, opts: &TrainOptions) -> Result<CvOutcome> {
    repeated_cv(data, cfg, opts)
}

pub fn evaluate(report: &PredictionReport, outcomes: &[crate::OutcomeRecord]) -> Result<OutcomeEvaluation> {
    evaluate_outcomes(report, outcomes)
}

/// Paths of the files written by [`run_pipeline`].
#[derive(Debug, Clone, PartialEq)]
pub struct Artifacts {
    pub graph: PathBuf,
    pub features: PathBuf,
    pub model: PathBuf,
    pub report: PathBuf,
    pub curve: Option<PathBuf>,
}

impl Artifacts {
    pub fn in_dir(dir: &Path, format: ExportFormat, with_curve: bool) -> Self {
        Artifacts {
            graph: dir.join(format!("graph.{}", format.extension())),
            features: dir.join("features.csv"),
            model: dir.join("model.json"),
            report: dir.join("report.csv"),
            curve: with_curve.then(|| dir.join("curve.csv")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub artifacts: Artifacts,
    pub node_count: usize,
    pub edge_count: usize,
    pub scene_count: usize,
    pub roster_size: usize,
    pub dead: usize,
    pub mean_accuracy: f64,
    pub living_ranking: Vec<crate::evaluation::CharacterEstimate>,
    pub baseline_rate: Option<f64>,
}

impl RunSummary {
    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "scenes: {}", self.scene_count);
        let _ = writeln!(out, "graph: {} nodes, {} edges", self.node_count, self.edge_count);
        let _ = writeln!(out, "roster: {} characters ({} dead)", self.roster_size, self.dead);
        let _ = writeln!(out, "cv accuracy: {:.4}", self.mean_accuracy);
        if let Some(b) = self.baseline_rate {
            let _ = writeln!(out, "outcome baseline rate: {b:.4}");
        }
        let _ = writeln!(out, "most likely to die (living):");
        for (i, e) in self.living_ranking.iter().take(10).enumerate() {
            let _ = writeln!(
                out,
                "  {:>2}. {:<24} {:.3} ± {:.3}",
                i + 1,
                e.character.as_str(),
                e.mean_probability,
                e.std_probability
            );
        }
        out
    }
}

/// Sizes the global rayon pool used by the standalone stage functions.
pub fn init_global_threads(threads: usize) -> Result<()> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))
}

fn stage<T>(name: &'static str, r: Result<T>) -> Result<T> {
    r.map_err(|e| e.in_stage(name))
}

/// Runs every stage in order, writing each artifact as soon as its stage
/// completes. On error, files from completed stages are left in place.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<RunSummary> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    pool.install(|| run_stages(cfg))
}

fn run_stages(cfg: &PipelineConfig) -> Result<RunSummary> {
    let scenes_path = cfg.scenes.as_deref().expect("validated");
    let labels_path = cfg.labels.as_deref().expect("validated");

    let aliases = stage("ingest", load_aliases(cfg.aliases.as_deref()))?;
    let scenes = stage("ingest", load_scenes(scenes_path, &aliases, cfg.strict))?;
    let labels = stage("ingest", io::read_text(labels_path).and_then(|t| io::parse_labels(&t, &aliases)))?;
    let roster = match &cfg.roster {
        Some(p) => stage("ingest", io::read_text(p).and_then(|t| io::parse_roster(&t, &aliases)))?,
        None => labels.iter().map(|(c, _)| c.clone()).collect(),
    };
    let houses = match &cfg.houses {
        Some(p) => Some(stage("ingest", io::read_text(p).and_then(|t| io::parse_houses(&t, &aliases)))?),
        None => None,
    };
    let outcomes = match &cfg.outcomes {
        Some(p) => Some(stage("ingest", io::read_text(p).and_then(|t| io::parse_outcomes(&t, &aliases)))?),
        None => None,
    };

    std::fs::create_dir_all(&cfg.out_dir).map_err(|e| Error::io(&cfg.out_dir, e))?;
    let artifacts = Artifacts::in_dir(&cfg.out_dir, cfg.format, outcomes.is_some());

    let graph = build_graph(&scenes);
    let export = stage("graph", graph_export(&graph, cfg.min_degree, cfg.format, houses.as_ref()))?;
    stage("graph", io::write_text(&artifacts.graph, &export))?;

    let features_text = stage("features", features_csv(&graph, &roster))?;
    stage("features", io::write_text(&artifacts.features, &features_text))?;
    let features = stage("features", io::parse_features(&features_text))?;

    let data = stage("train", labeled_dataset(&features, &labels))?;
    let opts = TrainOptions { c: cfg.c, tolerance: cfg.tolerance, balanced: cfg.balanced, ..Default::default() };
    let model = stage("train", train_model(&data, &opts))?;
    stage("train", model.save(&artifacts.model))?;

    let cv_cfg = CvConfig { folds: cfg.folds, repetitions: cfg.repetitions, seed: cfg.seed };
    let cv = stage("predict", predict(&data, &cv_cfg, &opts))?;
    let report_text = stage("predict", io::write_report(&cv.report))?;
    stage("predict", io::write_text(&artifacts.report, &report_text))?;

    let label_map: BTreeMap<CharacterId, bool> = labels.iter().cloned().collect();
    let living_ranking = rank_living(&cv.report, &label_map);

    let mut baseline_rate = None;
    if let (Some(outcomes), Some(curve_path)) = (&outcomes, &artifacts.curve) {
        let report = stage("evaluate", io::parse_report(&report_text))?;
        let ev = stage("evaluate", evaluate(&report, outcomes))?;
        stage("evaluate", io::write_curve(&ev.curve).and_then(|t| io::write_text(curve_path, &t)))?;
        baseline_rate = Some(ev.baseline_rate);
    }

    Ok(RunSummary {
        artifacts,
        node_count: graph.node_count(),
        edge_count: graph.edge_count(),
        scene_count: scenes.len(),
        roster_size: data.len(),
        dead: data.class_counts().0,
        mean_accuracy: cv.mean_accuracy,
        living_ranking,
        baseline_rate,
    })
}
