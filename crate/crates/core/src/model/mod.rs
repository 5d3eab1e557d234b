//! Linear SVM training, scoring and calibrated probabilities.
//!
//! Labels follow the convention `dead = positive`: a higher decision score
//! means the character is more likely to die, so a fitted model normally
//! has `platt_a < 0`.

pub mod platt;
pub mod smo;

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::centrality::{ColumnStats, FeatureMatrix, FEATURE_NAMES, N_FEATURES};
use crate::error::{Error, Result};

pub use platt::{calibrate, sigmoid_probability, PlattFit};
pub use smo::{DualSolution, SmoParams};

/// Number of folds used to produce out-of-fold scores for calibration.
pub const CALIBRATION_FOLDS: usize = 3;

pub const MODEL_FORMAT_VERSION: u32 = 1;

/// Raw feature rows with a dead/alive label per roster entry.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub matrix: FeatureMatrix,
    /// `true` = dead.
    pub labels: Vec<bool>,
}

impl LabeledDataset {
    pub fn new(matrix: FeatureMatrix, labels: Vec<bool>) -> Result<Self> {
        if matrix.len() != labels.len() {
            return Err(Error::Training(format!(
                "{} feature rows but {} labels",
                matrix.len(),
                labels.len()
            )));
        }
        Ok(LabeledDataset { matrix, labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// `(dead, alive)` counts.
    pub fn class_counts(&self) -> (usize, usize) {
        let dead = self.labels.iter().filter(|&&d| d).count();
        (dead, self.labels.len() - dead)
    }

    pub fn subset(&self, indices: &[usize]) -> LabeledDataset {
        LabeledDataset {
            matrix: self.matrix.subset(indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainOptions {
    pub c: f64,
    pub tolerance: f64,
    pub max_iter: usize,
    /// Scale C per class by `n / (2 · n_class)`.
    pub balanced: bool,
}

impl Default for TrainOptions {
    fn default() -> Self {
        let smo = SmoParams::default();
        TrainOptions { c: 1.0, tolerance: smo.tolerance, max_iter: smo.max_iter, balanced: false }
    }
}

impl TrainOptions {
    fn smo(&self) -> SmoParams {
        SmoParams { tolerance: self.tolerance, max_iter: self.max_iter }
    }

    fn bounds(&self, labels: &[bool]) -> Vec<f64> {
        if !self.balanced {
            return vec![self.c; labels.len()];
        }
        let n = labels.len() as f64;
        let dead = labels.iter().filter(|&&d| d).count() as f64;
        let alive = n - dead;
        labels
            .iter()
            .map(|&d| self.c * n / (2.0 * if d { dead } else { alive }))
            .collect()
    }
}

/// A trained, calibrated linear model. The column transform fitted on the
/// training rows is part of the model.
#[derive(Debug, Clone, PartialEq)]
pub struct SvmModel {
    pub weights: [f64; N_FEATURES],
    pub bias: f64,
    pub c: f64,
    pub platt_a: f64,
    pub platt_b: f64,
    pub column_stats: ColumnStats,
}

impl SvmModel {
    /// `w·z + b` with `z` the standardized row.
    pub fn decision_score(&self, x: &[f64; N_FEATURES]) -> f64 {
        let z = self.column_stats.transform(x);
        smo::dot(&self.weights, &z) + self.bias
    }

    /// Calibrated probability of the positive (dead) class.
    pub fn predict_proba(&self, x: &[f64; N_FEATURES]) -> f64 {
        sigmoid_probability(self.platt_a, self.platt_b, self.decision_score(x))
    }

    pub fn to_json(&self) -> Result<String> {
        let file = ModelFile {
            version: MODEL_FORMAT_VERSION,
            feature_names: FEATURE_NAMES.map(String::from),
            weights: self.weights,
            bias: self.bias,
            c: self.c,
            platt_a: self.platt_a,
            platt_b: self.platt_b,
            column_means: self.column_stats.means,
            column_stds: self.column_stats.stds,
        };
        let mut text = serde_json::to_string_pretty(&file)?;
        text.push('\n');
        Ok(text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text)?;
        if file.version != MODEL_FORMAT_VERSION {
            return Err(Error::format("model", format!("unsupported model version {}", file.version)));
        }
        if file.feature_names.iter().map(String::as_str).ne(FEATURE_NAMES) {
            return Err(Error::format("model", "feature names do not match this build"));
        }
        Ok(SvmModel {
            weights: file.weights,
            bias: file.bias,
            c: file.c,
            platt_a: file.platt_a,
            platt_b: file.platt_b,
            column_stats: ColumnStats { means: file.column_means, stds: file.column_stds },
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        SvmModel::from_json(&text)
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct ModelFile {
    version: u32,
    feature_names: [String; N_FEATURES],
    weights: [f64; N_FEATURES],
    bias: f64,
    #[serde(rename = "C")]
    c: f64,
    platt_a: f64,
    platt_b: f64,
    column_means: [f64; N_FEATURES],
    column_stds: [f64; N_FEATURES],
}

/// Everything the solver produced, for inspection in tests and diagnostics.
#[derive(Debug, Clone)]
pub struct TrainReport {
    pub model: SvmModel,
    /// Dual solution over the standardized training rows.
    pub solution: DualSolution,
    pub standardized_rows: Vec<Vec<f64>>,
    pub signed_labels: Vec<f64>,
    pub bounds: Vec<f64>,
    pub calibration: PlattFit,
}

impl TrainReport {
    pub fn kkt_residuals(&self) -> Vec<f64> {
        self.solution.kkt_residuals(&self.standardized_rows, &self.signed_labels, &self.bounds)
    }
}

/// Trains on `data` and returns the calibrated model.
pub fn train_svm(data: &LabeledDataset, opts: &TrainOptions) -> Result<SvmModel> {
    train_svm_detailed(data, opts).map(|r| r.model)
}

pub fn train_svm_detailed(data: &LabeledDataset, opts: &TrainOptions) -> Result<TrainReport> {
    if !(opts.c > 0.0 && opts.c.is_finite()) {
        return Err(Error::Training(format!("C must be a positive finite number, got {}", opts.c)));
    }
    if !(opts.tolerance > 0.0) {
        return Err(Error::Training("tolerance must be positive".into()));
    }
    let (dead, alive) = data.class_counts();
    if dead < 2 || alive < 2 {
        return Err(Error::Training(format!(
            "need at least 2 samples per class, got {dead} dead and {alive} alive"
        )));
    }
    if data.matrix.rows.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Training("feature values must be finite".into()));
    }

    let stats = ColumnStats::fit(&data.matrix.rows);
    let z: Vec<Vec<f64>> = data.matrix.rows.iter().map(|r| stats.transform(r).to_vec()).collect();
    let y: Vec<f64> = data.labels.iter().map(|&d| if d { 1.0 } else { -1.0 }).collect();
    let bounds = opts.bounds(&data.labels);
    let solution = smo::solve(&z, &y, &bounds, opts.smo())?;

    let oof = out_of_fold_scores(&z, &data.labels, opts)?;
    let calibration = calibrate(&oof, &data.labels)?;

    let mut weights = [0.0; N_FEATURES];
    weights.copy_from_slice(&solution.weights);
    let model = SvmModel {
        weights,
        bias: solution.bias,
        c: opts.c,
        platt_a: calibration.a,
        platt_b: calibration.b,
        column_stats: stats,
    };
    Ok(TrainReport { model, solution, standardized_rows: z, signed_labels: y, bounds, calibration })
}

/// Deterministic stratified split: the k-th member of each class goes to
/// fold `k mod CALIBRATION_FOLDS`.
fn calibration_folds(labels: &[bool]) -> Vec<usize> {
    let mut seen = [0usize; 2];
    labels
        .iter()
        .map(|&l| {
            let class = usize::from(l);
            let fold = seen[class] % CALIBRATION_FOLDS;
            seen[class] += 1;
            fold
        })
        .collect()
}

fn out_of_fold_scores(z: &[Vec<f64>], labels: &[bool], opts: &TrainOptions) -> Result<Vec<f64>> {
    let folds = calibration_folds(labels);
    let mut scores = vec![0.0; z.len()];
    for fold in 0..CALIBRATION_FOLDS {
        let held: Vec<usize> = (0..z.len()).filter(|&i| folds[i] == fold).collect();
        if held.is_empty() {
            continue;
        }
        let train: Vec<usize> = (0..z.len()).filter(|&i| folds[i] != fold).collect();
        let tx: Vec<Vec<f64>> = train.iter().map(|&i| z[i].clone()).collect();
        let tl: Vec<bool> = train.iter().map(|&i| labels[i]).collect();
        let ty: Vec<f64> = tl.iter().map(|&d| if d { 1.0 } else { -1.0 }).collect();
        let sol = smo::solve(&tx, &ty, &opts.bounds(&tl), opts.smo())?;
        for &i in &held {
            scores[i] = sol.decision(&z[i]);
        }
    }
    Ok(scores)
}
