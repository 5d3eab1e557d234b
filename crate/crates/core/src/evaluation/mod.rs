//! Repeated stratified cross-validation, survivor ranking, and scoring of
//! predictions against later outcomes.

pub mod rng;

use std::collections::{BTreeMap, HashMap, HashSet};

use rayon::prelude::*;

use crate::character::CharacterId;
use crate::error::{Error, Result};
use crate::model::{train_svm, LabeledDataset, TrainOptions};

use rng::{derive_seed, SplitMix64};

/// Stage name hashed into the top-level seed for fold assignment.
pub const CV_STAGE: &str = "predict";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CvConfig {
    pub folds: usize,
    pub repetitions: usize,
    pub seed: u64,
}

impl Default for CvConfig {
    fn default() -> Self {
        CvConfig { folds: 5, repetitions: 100, seed: 0 }
    }
}

impl CvConfig {
    /// Checks the config against the class sizes of `data`.
    pub fn validate(&self, data: &LabeledDataset) -> Result<()> {
        if self.folds < 2 {
            return Err(Error::Config(format!("folds must be at least 2, got {}", self.folds)));
        }
        if self.repetitions < 1 {
            return Err(Error::Config("repetitions must be at least 1".into()));
        }
        let (dead, alive) = data.class_counts();
        let minority = dead.min(alive);
        if minority < self.folds {
            return Err(Error::Config(format!(
                "cannot stratify {} folds: classes have {dead} dead and {alive} alive members",
                self.folds
            )));
        }
        Ok(())
    }
}

/// Stratified fold assignment for one repetition.
///
/// Each class is shuffled independently and dealt round-robin; the second
/// class continues the deal where the first stopped, so total fold sizes
/// also differ by at most one.
pub fn stratified_folds(labels: &[bool], folds: usize, rng: &mut SplitMix64) -> Vec<usize> {
    let mut assignment = vec![0; labels.len()];
    let mut offset = 0;
    for class in [false, true] {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        rng.shuffle(&mut members);
        for (k, &i) in members.iter().enumerate() {
            assignment[i] = (offset + k) % folds;
        }
        offset = (offset + members.len()) % folds;
    }
    assignment
}

/// Per-character aggregate of held-out probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct CharacterEstimate {
    pub character: CharacterId,
    pub mean_probability: f64,
    pub std_probability: f64,
    pub n_estimates: usize,
    pub rank: usize,
}

/// Estimates for every roster member, ordered by rank.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PredictionReport {
    pub entries: Vec<CharacterEstimate>,
}

impl PredictionReport {
    /// Builds a report from `(character, mean, std, n)` tuples, assigning
    /// ranks by descending mean with ties broken by ascending id.
    pub fn from_estimates(mut rows: Vec<(CharacterId, f64, f64, usize)>) -> Self {
        rows.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        PredictionReport {
            entries: rows
                .into_iter()
                .enumerate()
                .map(|(i, (character, mean, std, n))| CharacterEstimate {
                    character,
                    mean_probability: mean,
                    std_probability: std,
                    n_estimates: n,
                    rank: i + 1,
                })
                .collect(),
        }
    }

    pub fn get(&self, id: &CharacterId) -> Option<&CharacterEstimate> {
        self.entries.iter().find(|e| &e.character == id)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvOutcome {
    pub report: PredictionReport,
    pub mean_accuracy: f64,
    pub repetition_accuracies: Vec<f64>,
    /// `probabilities[r][i]`: held-out probability of sample `i` in repetition `r`.
    pub probabilities: Vec<Vec<f64>>,
}

/// Running mean/variance (Welford). Identical inputs give exactly that
/// value as the mean and a zero variance.
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: usize,
    mean: f64,
    m2: f64,
    min: f64,
    max: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        if self.n == 0 {
            self.min = x;
            self.max = x;
        } else {
            self.min = self.min.min(x);
            self.max = self.max.max(x);
        }
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    fn mean(&self) -> f64 {
        self.mean.clamp(self.min, self.max)
    }

    /// Population standard deviation.
    fn std(&self) -> f64 {
        if self.min == self.max {
            0.0
        } else {
            (self.m2.max(0.0) / self.n as f64).sqrt()
        }
    }
}

fn run_repetition(data: &LabeledDataset, cfg: &CvConfig, seed: u64, opts: &TrainOptions) -> Result<(Vec<f64>, f64)> {
    let mut rng = SplitMix64::new(seed);
    let folds = stratified_folds(&data.labels, cfg.folds, &mut rng);
    let mut probs = vec![0.0; data.len()];
    for fold in 0..cfg.folds {
        let train: Vec<usize> = (0..data.len()).filter(|&i| folds[i] != fold).collect();
        let model = train_svm(&data.subset(&train), opts)?;
        for i in (0..data.len()).filter(|&i| folds[i] == fold) {
            probs[i] = model.predict_proba(&data.matrix.rows[i]);
        }
    }
    let correct = probs.iter().zip(&data.labels).filter(|(p, &dead)| (**p > 0.5) == dead).count();
    Ok((probs, correct as f64 / data.len() as f64))
}

/// Repeated stratified k-fold cross-validation.
///
/// Repetition seeds are drawn up front from the stage seed, so repetitions
/// may run in parallel on the current rayon pool; results are reduced in
/// repetition order.
pub fn repeated_cv(data: &LabeledDataset, cfg: &CvConfig, opts: &TrainOptions) -> Result<CvOutcome> {
    cfg.validate(data)?;
    let mut master = SplitMix64::new(derive_seed(cfg.seed, CV_STAGE));
    let seeds: Vec<u64> = (0..cfg.repetitions).map(|_| master.next_u64()).collect();

    let results: Vec<(Vec<f64>, f64)> = seeds
        .par_iter()
        .map(|&s| run_repetition(data, cfg, s, opts))
        .collect::<Result<_>>()?;

    let mut moments = vec![Moments::default(); data.len()];
    let mut accuracies = Vec::with_capacity(results.len());
    let mut probabilities = Vec::with_capacity(results.len());
    for (probs, acc) in results {
        for (m, &p) in moments.iter_mut().zip(&probs) {
            m.push(p);
        }
        accuracies.push(acc);
        probabilities.push(probs);
    }
    let mean_accuracy = accuracies.iter().sum::<f64>() / accuracies.len() as f64;
    let report = PredictionReport::from_estimates(
        data.matrix
            .roster
            .iter()
            .zip(&moments)
            .map(|(id, m)| (id.clone(), m.mean(), m.std(), m.n))
            .collect(),
    );
    Ok(CvOutcome { report, mean_accuracy, repetition_accuracies: accuracies, probabilities })
}

/// Alive characters ordered by descending mean probability, ties by id.
/// Characters without a label are skipped.
pub fn rank_living(report: &PredictionReport, labels: &BTreeMap<CharacterId, bool>) -> Vec<CharacterEstimate> {
    let mut alive: Vec<CharacterEstimate> = report
        .entries
        .iter()
        .filter(|e| labels.get(&e.character) == Some(&false))
        .cloned()
        .collect();
    alive.sort_by(|a, b| {
        b.mean_probability.total_cmp(&a.mean_probability).then_with(|| a.character.cmp(&b.character))
    });
    alive
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutcomeRecord {
    pub character: CharacterId,
    pub died: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdPoint {
    pub threshold: f64,
    pub n_above: usize,
    /// `None` when nothing lies above the threshold.
    pub accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ThresholdCurve {
    pub points: Vec<ThresholdPoint>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeHit {
    pub character: CharacterId,
    pub probability: f64,
    pub died: bool,
    pub hit: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeEvaluation {
    pub baseline_rate: f64,
    pub hits: Vec<OutcomeHit>,
    pub curve: ThresholdCurve,
}

/// Thresholds `0.00, 0.01, …, 1.00`.
pub fn threshold_grid() -> Vec<f64> {
    (0..=100).map(|i| i as f64 / 100.0).collect()
}

/// Accuracy over characters whose probability strictly exceeds each threshold.
pub fn threshold_curve(hits: &[OutcomeHit], thresholds: &[f64]) -> ThresholdCurve {
    ThresholdCurve {
        points: thresholds
            .iter()
            .map(|&t| {
                let above: Vec<&OutcomeHit> = hits.iter().filter(|h| h.probability > t).collect();
                let n_above = above.len();
                let accuracy =
                    (n_above > 0).then(|| above.iter().filter(|h| h.hit).count() as f64 / n_above as f64);
                ThresholdPoint { threshold: t, n_above, accuracy }
            })
            .collect(),
    }
}

/// Scores the report against observed outcomes.
///
/// A prediction is a hit when `mean_probability > 0.5` agrees with the
/// character having died. Outcome order is preserved in `hits`.
pub fn evaluate_outcomes(report: &PredictionReport, outcomes: &[OutcomeRecord]) -> Result<OutcomeEvaluation> {
    if outcomes.is_empty() {
        return Err(Error::Config("no outcomes to evaluate".into()));
    }
    let probs: HashMap<&CharacterId, f64> =
        report.entries.iter().map(|e| (&e.character, e.mean_probability)).collect();
    let mut seen = HashSet::new();
    let mut hits = Vec::with_capacity(outcomes.len());
    for o in outcomes {
        if !seen.insert(&o.character) {
            return Err(Error::Config(format!("duplicate outcome for {}", o.character)));
        }
        let probability =
            *probs.get(&o.character).ok_or_else(|| Error::UnknownCharacter(o.character.clone(), "report"))?;
        hits.push(OutcomeHit {
            character: o.character.clone(),
            probability,
            died: o.died,
            hit: (probability > 0.5) == o.died,
        });
    }
    let deaths = outcomes.iter().filter(|o| o.died).count();
    Ok(OutcomeEvaluation {
        baseline_rate: deaths as f64 / outcomes.len() as f64,
        curve: threshold_curve(&hits, &threshold_grid()),
        hits,
    })
}
