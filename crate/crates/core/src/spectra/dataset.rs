use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::index;
use rand::Rng as _;
use thiserror::Error;

use super::{BinnedSpectrum, N_BINS};
use crate::seed;

/// Upper bound on the number of compound classes (and the network's output width).
pub const MAX_CLASSES: usize = 45;

/// Index of a class in a dataset's label catalogue.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ClassId(pub usize);

impl ClassId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Train,
    Test,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DatasetError {
    #[error("catalogue has {0} labels, at most {MAX_CLASSES} allowed")]
    TooManyLabels(usize),
    #[error("duplicate label name {0:?}")]
    DuplicateLabel(String),
    #[error("item {item}: label index {label} not in catalogue")]
    UnknownLabel { item: usize, label: usize },
    #[error("training set has no example of class {0}")]
    MissingClass(usize),
    #[error("dataset is empty")]
    Empty,
    #[error("invalid synthetic dataset parameters: {0}")]
    InvalidSynthConfig(&'static str),
}

/// Spectra paired with class indices into a shared label catalogue.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    role: Role,
    labels: Vec<String>,
    items: Vec<(BinnedSpectrum, ClassId)>,
}

impl LabeledDataset {
    /// Validates the catalogue and labels. A training set must contain
    /// every catalogued class at least once.
    pub fn new(role: Role, labels: Vec<String>, items: Vec<(BinnedSpectrum, ClassId)>) -> Result<Self, DatasetError> {
        if labels.len() > MAX_CLASSES {
            return Err(DatasetError::TooManyLabels(labels.len()));
        }
        let mut seen = BTreeSet::new();
        for name in &labels {
            if !seen.insert(name.as_str()) {
                return Err(DatasetError::DuplicateLabel(name.clone()));
            }
        }
        if items.is_empty() {
            return Err(DatasetError::Empty);
        }
        for (item, (_, label)) in items.iter().enumerate() {
            if label.0 >= labels.len() {
                return Err(DatasetError::UnknownLabel { item, label: label.0 });
            }
        }
        if role == Role::Train {
            let present: BTreeSet<usize> = items.iter().map(|(_, c)| c.0).collect();
            if let Some(missing) = (0..labels.len()).find(|c| !present.contains(c)) {
                return Err(DatasetError::MissingClass(missing));
            }
        }
        Ok(Self { role, labels, items })
    }

    pub fn role(&self) -> Role {
        self.role
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn items(&self) -> &[(BinnedSpectrum, ClassId)] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn n_classes(&self) -> usize {
        self.labels.len()
    }

    /// Applies `f` to every spectrum, keeping labels and role.
    pub fn map_spectra(&self, mut f: impl FnMut(usize, &BinnedSpectrum) -> BinnedSpectrum) -> Self {
        Self {
            role: self.role,
            labels: self.labels.clone(),
            items: self.items.iter().enumerate().map(|(i, (s, c))| (f(i, s), *c)).collect(),
        }
    }
}

/// Parameters of the synthetic corpus.
///
/// Each class gets a fixed template of major peaks at distinct positions.
/// An instance is the template with multiplicative Gaussian jitter on the
/// peak heights plus a few small spurious peaks, normalized to a unit base
/// peak.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub n_classes: usize,
    pub train_per_class: usize,
    pub test_per_class: usize,
    pub seed: u64,
    pub min_peaks: usize,
    pub max_peaks: usize,
    pub min_height: f64,
    pub max_height: f64,
    /// Standard deviation of the relative height jitter.
    pub height_jitter: f64,
    pub min_spurious: usize,
    pub max_spurious: usize,
    pub max_spurious_height: f64,
    /// Template heights are scaled by `exp(-bin / mass_decay)`, so low-mass
    /// fragments dominate as in electron-impact spectra. 0 disables it.
    pub mass_decay: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_classes: MAX_CLASSES,
            train_per_class: 2,
            test_per_class: 8,
            seed: 0,
            min_peaks: 8,
            max_peaks: 15,
            min_height: 0.2,
            max_height: 1.0,
            height_jitter: 0.03,
            min_spurious: 1,
            max_spurious: 3,
            max_spurious_height: 0.05,
            mass_decay: 100.0,
        }
    }
}

impl SynthConfig {
    pub fn new(n_classes: usize, train_per_class: usize, test_per_class: usize, seed: u64) -> Self {
        Self { n_classes, train_per_class, test_per_class, seed, ..Self::default() }
    }

    fn validate(&self) -> Result<(), DatasetError> {
        let bad = DatasetError::InvalidSynthConfig;
        if self.n_classes == 0 || self.n_classes > MAX_CLASSES {
            return Err(bad("n_classes must be in 1..=45"));
        }
        if self.train_per_class == 0 || self.test_per_class == 0 {
            return Err(bad("per-class counts must be >= 1"));
        }
        if self.min_peaks == 0 || self.min_peaks > self.max_peaks || self.max_peaks > N_BINS {
            return Err(bad("peak count range"));
        }
        if !(0.0 < self.min_height && self.min_height <= self.max_height) {
            return Err(bad("peak height range"));
        }
        if self.mass_decay.is_nan() || self.mass_decay < 0.0 {
            return Err(bad("mass_decay must be >= 0"));
        }
        if self.min_spurious > self.max_spurious
            || [self.height_jitter, self.max_spurious_height].iter().any(|v| v.is_nan() || *v < 0.0)
        {
            return Err(bad("jitter or spurious peak parameters"));
        }
        Ok(())
    }
}

struct Template {
    positions: Vec<usize>,
    heights: Vec<f64>,
}

/// Catalogue names used for synthetic classes.
pub fn synth_label(i: usize) -> String {
    format!("PMAA-{:02}", i + 1)
}

/// Generates a deterministic train/test pair from `cfg`.
pub fn synth_dataset(cfg: &SynthConfig) -> Result<(LabeledDataset, LabeledDataset), DatasetError> {
    cfg.validate()?;
    let templates = templates(cfg);
    let labels: Vec<String> = (0..cfg.n_classes).map(synth_label).collect();
    let mut train = Vec::with_capacity(cfg.n_classes * cfg.train_per_class);
    let mut test = Vec::with_capacity(cfg.n_classes * cfg.test_per_class);
    for (c, template) in templates.iter().enumerate() {
        let mut rng = seed::rng_stream(cfg.seed, 1 + c as u64);
        for _ in 0..cfg.train_per_class {
            train.push((instance(template, cfg, &mut rng), ClassId(c)));
        }
        for _ in 0..cfg.test_per_class {
            test.push((instance(template, cfg, &mut rng), ClassId(c)));
        }
    }
    Ok((LabeledDataset::new(Role::Train, labels.clone(), train)?, LabeledDataset::new(Role::Test, labels, test)?))
}

/// Major-peak bin positions of each class template, in class order.
pub fn synth_templates(cfg: &SynthConfig) -> Result<Vec<Vec<usize>>, DatasetError> {
    cfg.validate()?;
    Ok(templates(cfg).into_iter().map(|t| t.positions).collect())
}

fn templates(cfg: &SynthConfig) -> Vec<Template> {
    let mut rng = seed::rng_stream(cfg.seed, 0);
    let mut out: Vec<Template> = Vec::with_capacity(cfg.n_classes);
    let mut position_sets: BTreeSet<Vec<usize>> = BTreeSet::new();
    while out.len() < cfg.n_classes {
        let candidate = random_template(cfg, &mut rng);
        // Regenerate on a position-set collision.
        if position_sets.insert(candidate.positions.clone()) {
            out.push(candidate);
        }
    }
    out
}

fn peak_height(pos: usize, cfg: &SynthConfig, rng: &mut seed::Rng) -> f64 {
    let h = rng.random_range(cfg.min_height..=cfg.max_height);
    if cfg.mass_decay > 0.0 {
        h * libm::exp(-(pos as f64) / cfg.mass_decay)
    } else {
        h
    }
}

fn random_template(cfg: &SynthConfig, rng: &mut seed::Rng) -> Template {
    let n_peaks = rng.random_range(cfg.min_peaks..=cfg.max_peaks);
    let mut positions = index::sample(rng, N_BINS, n_peaks).into_vec();
    positions.sort_unstable();
    let heights = positions.iter().map(|&p| peak_height(p, cfg, rng)).collect();
    Template { positions, heights }
}

fn instance(t: &Template, cfg: &SynthConfig, rng: &mut seed::Rng) -> BinnedSpectrum {
    use rand_distr::{Distribution, StandardNormal};
    let mut bins = alloc::vec![0.0; N_BINS];
    for (&pos, &h) in t.positions.iter().zip(&t.heights) {
        let z: f64 = StandardNormal.sample(rng);
        bins[pos] = (h * (1.0 + cfg.height_jitter * z)).max(0.0);
    }
    let n_spurious = rng.random_range(cfg.min_spurious..=cfg.max_spurious);
    for _ in 0..n_spurious {
        let pos = rng.random_range(0..N_BINS);
        bins[pos] += rng.random_range(0.0..=cfg.max_spurious_height);
    }
    // Template heights are >= min_height > 0 and jitter is small, so the
    // maximum is positive.
    BinnedSpectrum::new(bins).and_then(|s| s.normalize()).expect("synthetic spectrum has a positive base peak")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_training_set_size() {
        let (train, test) = synth_dataset(&SynthConfig::new(45, 2, 8, 3)).unwrap();
        assert_eq!(train.len(), 90);
        assert_eq!(test.len(), 360);
        assert_eq!(train.n_classes(), 45);
        assert_eq!(train.role(), Role::Train);
        assert_eq!(test.role(), Role::Test);
    }

    #[test]
    fn deterministic() {
        let cfg = SynthConfig::new(10, 2, 3, 42);
        assert_eq!(synth_dataset(&cfg).unwrap(), synth_dataset(&cfg).unwrap());
        let other = SynthConfig::new(10, 2, 3, 43);
        assert_ne!(synth_dataset(&cfg).unwrap().0, synth_dataset(&other).unwrap().0);
    }

    #[test]
    fn spectra_are_valid_and_normalized() {
        let (train, test) = synth_dataset(&SynthConfig::new(45, 2, 8, 9)).unwrap();
        for (s, _) in train.items().iter().chain(test.items()) {
            assert_eq!(s.intensities().len(), N_BINS);
            assert!(s.intensities().iter().all(|v| *v >= 0.0));
            assert_eq!(s.max_intensity(), 1.0);
        }
    }

    #[test]
    fn rejects_bad_config() {
        assert!(synth_dataset(&SynthConfig::new(46, 2, 8, 0)).is_err());
        assert!(synth_dataset(&SynthConfig::new(45, 0, 8, 0)).is_err());
        assert!(synth_dataset(&SynthConfig::new(0, 1, 1, 0)).is_err());
    }

    #[test]
    fn dataset_validation() {
        let s = BinnedSpectrum::zeros();
        let labels = alloc::vec![String::from("a"), String::from("b")];
        assert_eq!(
            LabeledDataset::new(Role::Train, labels.clone(), alloc::vec![(s.clone(), ClassId(0))]),
            Err(DatasetError::MissingClass(1))
        );
        assert!(LabeledDataset::new(Role::Test, labels.clone(), alloc::vec![(s.clone(), ClassId(0))]).is_ok());
        assert_eq!(
            LabeledDataset::new(Role::Test, labels.clone(), alloc::vec![(s.clone(), ClassId(2))]),
            Err(DatasetError::UnknownLabel { item: 0, label: 2 })
        );
        assert_eq!(LabeledDataset::new(Role::Test, labels, alloc::vec![]), Err(DatasetError::Empty));
        let dup = alloc::vec![String::from("a"), String::from("a")];
        assert!(matches!(
            LabeledDataset::new(Role::Test, dup, alloc::vec![(s, ClassId(0))]),
            Err(DatasetError::DuplicateLabel(_))
        ));
    }
}
