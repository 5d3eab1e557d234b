//! Weighted character co-occurrence networks built from scene-structured
//! transcripts, per-character centrality features, and a calibrated linear
//! SVM that ranks characters by their probability of leaving the story.
//!
//! The crate is organized as a pipeline:
//!
//! 1. [`ingest`] parses the normalized scene format into [`SceneRecord`]s.
//! 2. [`graph`] aggregates scene cliques into a [`SocialGraph`].
//! 3. [`centrality`] computes the seven features and the [`FeatureMatrix`].
//! 4. [`model`] trains the SMO-backed linear SVM with Platt calibration.
//! 5. [`evaluation`] runs repeated stratified cross-validation and scores
//!    predictions against later outcomes.
//!
//! [`pipeline`] wires the stages together behind a flat key-value config.

pub mod centrality;
pub mod character;
pub mod error;
pub mod evaluation;
pub mod graph;
pub mod ingest;
pub mod io;
pub mod model;
pub mod pipeline;

pub use centrality::{assemble_features, ColumnStats, FeatureMatrix, FeatureVector, FEATURE_NAMES, N_FEATURES};
pub use character::CharacterId;
pub use error::{Error, Result};
pub use evaluation::{
    evaluate_outcomes, rank_living, repeated_cv, CvConfig, CvOutcome, OutcomeEvaluation, OutcomeRecord,
    PredictionReport, ThresholdCurve,
};
pub use graph::{build_graph, ExportFormat, SocialGraph};
pub use ingest::{AliasTable, RawScene, SceneRecord, TranscriptFormat};
pub use model::{LabeledDataset, SvmModel, TrainOptions};
pub use pipeline::PipelineConfig;

/// Crate version, as reported by `castnet --version`.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
