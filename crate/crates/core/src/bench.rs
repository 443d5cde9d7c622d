//! Experiment protocol: train both classifiers per seed, then score them on
//! the clean test set, on Gaussian-noised copies of it and on copies with a
//! low-mass window deleted.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use thiserror::Error;

use crate::ann::{self, Network, TrainConfig};
use crate::parzen::{Bandwidth, ParzenError, ParzenModel};
use crate::seed;
use crate::spectra::{noisy_copy, BinnedSpectrum, ClassId, LabeledDataset, MaskSpec, NoiseSpec, Role};

const TAG_PARZEN_REPLICAS: u64 = 0x9A52_E400;
const TAG_TEST_NOISE: u64 = 0x7E57_0000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BenchError {
    #[error("test set is empty")]
    EmptyTestSet,
    #[error("no seeds to run")]
    EmptyRun,
    #[error("test label {0} is not known to the classifier")]
    UnknownLabel(usize),
    #[error("train and test label catalogues differ")]
    CatalogueMismatch,
    #[error("classifier failed: {0}")]
    Classifier(String),
    #[error("invalid protocol configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ClassifierKind {
    Ann,
    Parzen,
}

impl ClassifierKind {
    pub const ALL: [ClassifierKind; 2] = [ClassifierKind::Ann, ClassifierKind::Parzen];

    pub fn name(self) -> &'static str {
        match self {
            ClassifierKind::Ann => "ann",
            ClassifierKind::Parzen => "parzen",
        }
    }
}

/// A trained model to score.
#[derive(Debug, Clone, Copy)]
pub enum Trained<'a> {
    Ann(&'a Network),
    Parzen(&'a ParzenModel),
}

impl Trained<'_> {
    pub fn kind(&self) -> ClassifierKind {
        match self {
            Trained::Ann(_) => ClassifierKind::Ann,
            Trained::Parzen(_) => ClassifierKind::Parzen,
        }
    }

    fn knows(&self, c: ClassId) -> bool {
        match self {
            Trained::Ann(n) => c.0 < n.dims().output,
            Trained::Parzen(m) => m.prior(c).is_some(),
        }
    }

    pub fn predict(&self, x: &[f64]) -> Result<ClassId, BenchError> {
        match self {
            Trained::Ann(n) => n.classify(x).map(|r| r.label).map_err(|e| BenchError::Classifier(e.to_string())),
            Trained::Parzen(m) => m.classify(x).map(|r| r.0).map_err(|e| BenchError::Classifier(e.to_string())),
        }
    }
}

/// Square count matrix indexed `[true][predicted]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    n: usize,
    counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn new(n: usize) -> Self {
        Self { n, counts: alloc::vec![0; n * n] }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn get(&self, truth: usize, predicted: usize) -> u64 {
        self.counts[truth * self.n + predicted]
    }

    pub fn row(&self, truth: usize) -> &[u64] {
        &self.counts[truth * self.n..(truth + 1) * self.n]
    }

    fn record(&mut self, truth: usize, predicted: usize) {
        self.counts[truth * self.n + predicted] += 1;
    }

    pub fn trace(&self) -> u64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    fn add(&mut self, other: &ConfusionMatrix) {
        self.counts.iter_mut().zip(&other.counts).for_each(|(a, b)| *a += b);
    }
}

/// Exact counts from scoring one classifier on one test set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Evaluation {
    pub total: u64,
    pub misclassified: u64,
    pub confusion: ConfusionMatrix,
}

impl Evaluation {
    /// Builds an evaluation from bare counts with an empty confusion matrix.
    pub fn from_counts(total: u64, misclassified: u64) -> Self {
        Self { total, misclassified, confusion: ConfusionMatrix::new(0) }
    }

    pub fn correct(&self) -> u64 {
        self.total - self.misclassified
    }

    pub fn accuracy(&self) -> f64 {
        self.correct() as f64 / self.total as f64
    }

    /// Accuracy as a percentage with two decimals, e.g. `95.84%`.
    pub fn percent(&self) -> String {
        format_percent(self.accuracy())
    }
}

pub fn format_percent(accuracy: f64) -> String {
    format!("{:.2}%", accuracy * 100.0)
}

/// Scores `model` on every item of `test`.
pub fn evaluate(model: Trained<'_>, test: &LabeledDataset) -> Result<Evaluation, BenchError> {
    if test.is_empty() {
        return Err(BenchError::EmptyTestSet);
    }
    let mut confusion = ConfusionMatrix::new(test.n_classes());
    let mut misclassified = 0;
    for (s, truth) in test.items() {
        if !model.knows(*truth) {
            return Err(BenchError::UnknownLabel(truth.0));
        }
        let predicted = model.predict(s.intensities())?;
        if predicted.0 >= test.n_classes() {
            return Err(BenchError::UnknownLabel(predicted.0));
        }
        if predicted != *truth {
            misclassified += 1;
        }
        confusion.record(truth.0, predicted.0);
    }
    Ok(Evaluation { total: test.len() as u64, misclassified, confusion })
}

/// A test-time degradation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Condition {
    Clean,
    Noise { level: f64 },
    Masked(MaskSpec),
}

impl Condition {
    pub fn label(&self) -> String {
        match self {
            Condition::Clean => "clean".to_string(),
            Condition::Noise { level } => format!("noise {}%", level * 100.0),
            Condition::Masked(m) => format!("masked {}-{} m/z", m.mz_lo(), m.mz_hi()),
        }
    }
}

/// Parzen-side training options.
#[derive(Debug, Clone, PartialEq)]
pub struct ParzenSettings {
    /// Noisy copies stored per training spectrum, alongside the original.
    pub replicas: usize,
    pub noise_level: f64,
    pub bandwidth: Bandwidth,
}

impl Default for ParzenSettings {
    fn default() -> Self {
        Self { replicas: 5, noise_level: 0.05, bandwidth: Bandwidth::Auto(Bandwidth::default_grid()) }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolConfig {
    pub seeds: Vec<u64>,
    pub noise_levels: Vec<f64>,
    pub mask: MaskSpec,
    /// The `seed` field is replaced by each run seed.
    pub ann: TrainConfig,
    pub parzen: ParzenSettings,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        Self {
            seeds: (1..=5).collect(),
            noise_levels: alloc::vec![0.05, 0.10],
            mask: MaskSpec::LOW_MASS,
            ann: TrainConfig::default(),
            parzen: ParzenSettings::default(),
        }
    }
}

impl ProtocolConfig {
    pub fn conditions(&self) -> Vec<Condition> {
        let mut c = alloc::vec![Condition::Clean];
        c.extend(self.noise_levels.iter().map(|&level| Condition::Noise { level }));
        c.push(Condition::Masked(self.mask));
        c
    }
}

/// Whether a row covers one seed or the pooled aggregate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Scope {
    Seed(u64),
    Mean,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub classifier: ClassifierKind,
    pub condition: Condition,
    pub scope: Scope,
    /// `Err` holds the failure note for a cell that could not be scored.
    pub outcome: Result<Evaluation, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnnTrainingSummary {
    pub epochs: usize,
    pub reached_target: bool,
    /// Best accuracy on the noisy per-epoch inputs.
    pub noisy_accuracy: f64,
    pub train: Evaluation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParzenTrainingSummary {
    pub bandwidth: f64,
    pub stored_samples: usize,
    pub train: Evaluation,
}

/// Training outcome for one seed; failures are kept as messages.
#[derive(Debug, Clone, PartialEq)]
pub struct SeedTraining {
    pub seed: u64,
    pub ann: Result<AnnTrainingSummary, String>,
    pub parzen: Result<ParzenTrainingSummary, String>,
}

/// Rows are ordered by classifier, then condition, then seed with the
/// pooled mean last.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub labels: Vec<String>,
    pub conditions: Vec<Condition>,
    pub seeds: Vec<u64>,
    pub rows: Vec<ReportRow>,
    pub training: Vec<SeedTraining>,
}

impl ExperimentReport {
    pub fn row(&self, classifier: ClassifierKind, condition: usize, scope: Scope) -> Option<&ReportRow> {
        let cond = self.conditions.get(condition)?;
        self.rows.iter().find(|r| r.classifier == classifier && r.condition == *cond && r.scope == scope)
    }

    /// Mean accuracy over seeds for a cell, ignoring failed seeds.
    pub fn mean_accuracy(&self, classifier: ClassifierKind, condition: usize) -> Option<f64> {
        let row = self.row(classifier, condition, Scope::Mean)?;
        row.outcome.as_ref().ok().map(Evaluation::accuracy)
    }
}

/// Builds the Parzen training set: each normalized training spectrum plus
/// `replicas` noisy copies.
pub fn augment_with_replicas(
    train: &LabeledDataset,
    replicas: usize,
    level: f64,
    seed_value: u64,
) -> Vec<(Vec<f64>, ClassId)> {
    let base = seed::derive(seed_value, TAG_PARZEN_REPLICAS);
    let mut out = Vec::with_capacity(train.len() * (1 + replicas));
    for (i, (s, c)) in train.items().iter().enumerate() {
        out.push((s.intensities().to_vec(), *c));
        for k in 0..replicas {
            let mut rng = seed::rng_stream(base, (i * replicas + k) as u64);
            out.push((noisy_copy(s.intensities(), level, &mut rng), *c));
        }
    }
    out
}

/// Fits the Parzen model on `train` augmented with noisy replicas for run seed `seed_value`.
pub fn fit_parzen(
    train: &LabeledDataset,
    settings: &ParzenSettings,
    seed_value: u64,
) -> Result<ParzenModel, ParzenError> {
    let stored = augment_with_replicas(train, settings.replicas, settings.noise_level, seed_value);
    ParzenModel::fit_vectors(stored.iter().map(|(x, c)| (x.as_slice(), *c)), &settings.bandwidth)
}

/// The test set under `condition` for run seed `seed_value`.
pub fn degrade(test: &LabeledDataset, condition: Condition, seed_value: u64) -> Result<LabeledDataset, BenchError> {
    Ok(match condition {
        Condition::Clean => test.clone(),
        Condition::Noise { level } => {
            let base = seed::derive(seed::derive(seed_value, TAG_TEST_NOISE), level.to_bits());
            let spec = |i: usize| NoiseSpec::new(level, seed::derive(base, i as u64));
            // Validate once; per-item specs then cannot fail.
            spec(0).map_err(|e| BenchError::InvalidConfig(e.to_string()))?;
            test.map_spectra(|i, s| s.with_noise(spec(i).expect("level validated")))
        }
        Condition::Masked(mask) => test.map_spectra(|_, s: &BinnedSpectrum| s.masked(mask)),
    })
}

/// Runs the full protocol over every seed.
pub fn run_protocol(
    train: &LabeledDataset,
    test: &LabeledDataset,
    cfg: &ProtocolConfig,
) -> Result<ExperimentReport, BenchError> {
    if cfg.seeds.is_empty() {
        return Err(BenchError::EmptyRun);
    }
    if train.labels() != test.labels() {
        return Err(BenchError::CatalogueMismatch);
    }
    if train.role() != Role::Train {
        return Err(BenchError::InvalidConfig("first dataset must have the train role".into()));
    }
    if test.is_empty() {
        return Err(BenchError::EmptyTestSet);
    }
    let conditions = cfg.conditions();
    for c in &conditions {
        if let Condition::Noise { level } = c {
            NoiseSpec::new(*level, 0).map_err(|e| BenchError::InvalidConfig(e.to_string()))?;
        }
    }

    let mut cells: Vec<Vec<Vec<Result<Evaluation, String>>>> = Vec::new(); // [seed][classifier][condition]
    let mut training = Vec::with_capacity(cfg.seeds.len());
    for &s in &cfg.seeds {
        let ann_cfg = TrainConfig { seed: s, ..cfg.ann.clone() };
        let ann_model = ann::train(train, &ann_cfg).map_err(|e| e.to_string());

        let parzen_model = fit_parzen(train, &cfg.parzen, s).map_err(|e| e.to_string());

        let ann_summary = match &ann_model {
            Ok((net, log)) => {
                evaluate(Trained::Ann(net), train).map_err(|e| e.to_string()).map(|ev| AnnTrainingSummary {
                    epochs: log.epochs.len(),
                    reached_target: log.reached_target,
                    noisy_accuracy: log.best_accuracy,
                    train: ev,
                })
            }
            Err(e) => Err(e.clone()),
        };
        let parzen_summary =
            match &parzen_model {
                Ok(m) => evaluate(Trained::Parzen(m), train).map_err(|e| e.to_string()).map(|ev| {
                    ParzenTrainingSummary { bandwidth: m.bandwidth(), stored_samples: m.stored_samples(), train: ev }
                }),
                Err(e) => Err(e.clone()),
            };
        training.push(SeedTraining { seed: s, ann: ann_summary, parzen: parzen_summary });

        let degraded: Vec<Result<LabeledDataset, BenchError>> =
            conditions.iter().map(|c| degrade(test, *c, s)).collect();
        let mut per_classifier = Vec::with_capacity(2);
        for kind in ClassifierKind::ALL {
            let model: Result<Trained<'_>, String> = match kind {
                ClassifierKind::Ann => ann_model.as_ref().map(|(n, _)| Trained::Ann(n)).map_err(Clone::clone),
                ClassifierKind::Parzen => parzen_model.as_ref().map(Trained::Parzen).map_err(Clone::clone),
            };
            let row: Vec<Result<Evaluation, String>> = degraded
                .iter()
                .map(|data| {
                    let model = model.clone()?;
                    let data = data.as_ref().map_err(|e| e.to_string())?;
                    evaluate(model, data).map_err(|e| e.to_string())
                })
                .collect();
            per_classifier.push(row);
        }
        cells.push(per_classifier);
    }

    let mut rows = Vec::new();
    for (ci, kind) in ClassifierKind::ALL.iter().enumerate() {
        for (ki, condition) in conditions.iter().enumerate() {
            let mut pooled: Option<Evaluation> = None;
            for (si, &s) in cfg.seeds.iter().enumerate() {
                let outcome = cells[si][ci][ki].clone();
                if let Ok(ev) = &outcome {
                    match &mut pooled {
                        None => pooled = Some(ev.clone()),
                        Some(p) => {
                            p.total += ev.total;
                            p.misclassified += ev.misclassified;
                            p.confusion.add(&ev.confusion);
                        }
                    }
                }
                rows.push(ReportRow { classifier: *kind, condition: *condition, scope: Scope::Seed(s), outcome });
            }
            rows.push(ReportRow {
                classifier: *kind,
                condition: *condition,
                scope: Scope::Mean,
                outcome: pooled.ok_or_else(|| "no seed produced a result".to_string()),
            });
        }
    }

    Ok(ExperimentReport { labels: train.labels().to_vec(), conditions, seeds: cfg.seeds.clone(), rows, training })
}
