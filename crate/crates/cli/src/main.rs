use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use castnet_core::evaluation::rng::PRNG_SPEC;
use castnet_core::evaluation::CvConfig;
use castnet_core::graph::build_graph;
use castnet_core::model::TrainOptions;
use castnet_core::{io, pipeline, ExportFormat, PipelineConfig};
use clap::{Args, Parser, Subcommand};

fn long_version() -> &'static str {
    Box::leak(format!("{} (prng {PRNG_SPEC})", castnet_core::VERSION).into_boxed_str())
}

/// Character co-occurrence networks and survival prediction.
#[derive(Debug, Parser)]
#[command(name = "castnet", version = long_version(), about)]
struct Cli {
    /// Worker threads for parallel stages.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct IngestArgs {
    /// Scenes file in the normalized `## SCENE` format.
    #[arg(long)]
    scenes: PathBuf,
    /// Alias CSV with header `raw_name,canonical_id`.
    #[arg(long)]
    aliases: Option<PathBuf>,
    /// Reject speaker names missing from the alias table.
    #[arg(long)]
    strict: bool,
}

#[derive(Debug, Args)]
struct ModelArgs {
    /// Soft-margin penalty.
    #[arg(long = "C", default_value_t = 1.0)]
    c: f64,
    /// SMO stopping tolerance on the KKT violation gap.
    #[arg(long, default_value_t = TrainOptions::default().tolerance)]
    tolerance: f64,
    /// Scale C per class by inverse class frequency.
    #[arg(long)]
    balanced: bool,
}

impl ModelArgs {
    fn options(&self) -> TrainOptions {
        TrainOptions { c: self.c, tolerance: self.tolerance, balanced: self.balanced, ..Default::default() }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build the co-occurrence graph and export it.
    BuildGraph {
        #[command(flatten)]
        ingest: IngestArgs,
        /// Iteratively drop nodes with fewer neighbors than this.
        #[arg(long, default_value_t = 0)]
        min_degree: usize,
        #[arg(long, default_value = "dot")]
        format: String,
        /// CSV `character,house` added to DOT node attributes.
        #[arg(long)]
        houses: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compute the raw feature table for a roster.
    Features {
        #[command(flatten)]
        ingest: IngestArgs,
        /// One character per line.
        #[arg(long)]
        roster: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a calibrated SVM on all labeled rows.
    Train {
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        labels: PathBuf,
        #[arg(long)]
        aliases: Option<PathBuf>,
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Repeated stratified cross-validation; writes the probability report.
    Predict {
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        labels: PathBuf,
        #[arg(long)]
        aliases: Option<PathBuf>,
        #[arg(long, default_value_t = 5)]
        folds: usize,
        #[arg(long, default_value_t = 100)]
        reps: usize,
        #[arg(long, default_value_t = pipeline::DEFAULT_SEED)]
        seed: u64,
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score a report against observed outcomes; writes the threshold curve.
    Evaluate {
        #[arg(long)]
        report: PathBuf,
        #[arg(long)]
        outcomes: PathBuf,
        #[arg(long)]
        aliases: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run every stage from a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out_dir: Option<PathBuf>,
        #[arg(long = "C")]
        c: Option<f64>,
        #[arg(long)]
        folds: Option<usize>,
        #[arg(long)]
        reps: Option<usize>,
        #[arg(long)]
        min_degree: Option<usize>,
        #[arg(long)]
        format: Option<String>,
    },
}

fn write(path: &Path, text: &str) -> Result<()> {
    io::write_text(path, text).map_err(Into::into)
}

fn install_threads(threads: usize) -> Result<()> {
    anyhow::ensure!(threads >= 1, "--threads must be at least 1");
    Ok(pipeline::init_global_threads(threads)?)
}

fn load_labeled(features: &Path, labels: &Path, aliases: Option<&Path>) -> Result<castnet_core::LabeledDataset> {
    let aliases = pipeline::load_aliases(aliases)?;
    let features = io::parse_features(&io::read_text(features)?).context("reading features")?;
    let labels = io::parse_labels(&io::read_text(labels)?, &aliases).context("reading labels")?;
    Ok(pipeline::labeled_dataset(&features, &labels)?)
}

fn execute(cli: Cli) -> Result<()> {
    if !matches!(cli.command, Command::Run { .. }) {
        install_threads(cli.threads.unwrap_or(1))?;
    }
    match cli.command {
        Command::BuildGraph { ingest, min_degree, format, houses, out } => {
            let format: ExportFormat = format.parse()?;
            let aliases = pipeline::load_aliases(ingest.aliases.as_deref())?;
            let scenes = pipeline::load_scenes(&ingest.scenes, &aliases, ingest.strict)?;
            let houses = houses.map(|p| io::parse_houses(&io::read_text(&p)?, &aliases)).transpose()?;
            let graph = build_graph(&scenes);
            write(&out, &pipeline::graph_export(&graph, min_degree, format, houses.as_ref())?)?;
            println!("{} scenes, {} nodes, {} edges", scenes.len(), graph.node_count(), graph.edge_count());
        }
        Command::Features { ingest, roster, out } => {
            let aliases = pipeline::load_aliases(ingest.aliases.as_deref())?;
            let scenes = pipeline::load_scenes(&ingest.scenes, &aliases, ingest.strict)?;
            let roster = io::parse_roster(&io::read_text(&roster)?, &aliases)?;
            let graph = build_graph(&scenes);
            write(&out, &pipeline::features_csv(&graph, &roster)?)?;
        }
        Command::Train { features, labels, aliases, model, out } => {
            let data = load_labeled(&features, &labels, aliases.as_deref())?;
            let trained = pipeline::train_model(&data, &model.options())?;
            trained.save(&out)?;
        }
        Command::Predict { features, labels, aliases, folds, reps, seed, model, out } => {
            let data = load_labeled(&features, &labels, aliases.as_deref())?;
            let cv = pipeline::predict(&data, &CvConfig { folds, repetitions: reps, seed }, &model.options())?;
            write(&out, &io::write_report(&cv.report)?)?;
            println!("cv accuracy: {:.4}", cv.mean_accuracy);
        }
        Command::Evaluate { report, outcomes, aliases, out } => {
            let aliases = pipeline::load_aliases(aliases.as_deref())?;
            let report = io::parse_report(&io::read_text(&report)?)?;
            let outcomes = io::parse_outcomes(&io::read_text(&outcomes)?, &aliases)?;
            let ev = pipeline::evaluate(&report, &outcomes)?;
            write(&out, &io::write_curve(&ev.curve)?)?;
            println!("baseline rate: {:.4}", ev.baseline_rate);
            for h in &ev.hits {
                println!(
                    "  {:<24} {:.3} {:<8} {}",
                    h.character.as_str(),
                    h.probability,
                    if h.died { "died" } else { "survived" },
                    if h.hit { "hit" } else { "miss" }
                );
            }
        }
        Command::Run { config, seed, out_dir, c, folds, reps, min_degree, format } => {
            let mut cfg = PipelineConfig::from_file(&config)?;
            if let Some(v) = seed {
                cfg.seed = v;
            }
            if let Some(v) = out_dir {
                cfg.out_dir = v;
            }
            if let Some(v) = c {
                cfg.c = v;
            }
            if let Some(v) = folds {
                cfg.folds = v;
            }
            if let Some(v) = reps {
                cfg.repetitions = v;
            }
            if let Some(v) = min_degree {
                cfg.min_degree = v;
            }
            if let Some(v) = format {
                cfg.format = v.parse()?;
            }
            if let Some(v) = cli.threads {
                cfg.threads = v;
            }
            let summary = pipeline::run_pipeline(&cfg)?;
            print!("{}", summary.render());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
