//! Run manifest: where the data comes from and how the protocol is run.
//!
//! Every field is optional; omitted fields take the defaults below.
//!
//! ```json
//! {
//!   "dataset": {"synth": {"n_classes": 45, "train_per_class": 2, "test_per_class": 8, "seed": 0}},
//!   "seeds": [1, 2, 3, 4, 5],
//!   "noise_levels": [0.05, 0.10],
//!   "mask": {"mz_lo": 50, "mz_hi": 90},
//!   "grid": {"learning_rates": [0.01, 0.05, 0.1, 0.5], "momenta": [0.0, 0.5, 0.9], "epsilon": 0.1},
//!   "ann": {"max_epochs": 2000, "target_train_accuracy": 1.0, "noise_level": 0.05, "target_patience": 200},
//!   "parzen": {"replicas": 5, "noise_level": 0.05, "bandwidth": "auto", "bandwidth_grid": null},
//!   "output_dir": "bench-report"
//! }
//! ```
//!
//! `dataset` may instead be `{"manifest": "path/to/manifest.json"}`, resolved
//! against the config file's directory.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use specid_core::ann::{HyperCell, HyperGrid, TrainConfig};
use specid_core::bench::{ParzenSettings, ProtocolConfig};
use specid_core::parzen::Bandwidth;
use specid_core::spectra::{MaskSpec, SynthConfig};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Parse { path: PathBuf, source: serde_json::Error },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum DatasetSource {
    Synth(SynthParams),
    Manifest(PathBuf),
}

/// Mirrors [`SynthConfig`]; see there for the meaning of each field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthParams {
    pub n_classes: usize,
    pub train_per_class: usize,
    pub test_per_class: usize,
    pub seed: u64,
    pub min_peaks: usize,
    pub max_peaks: usize,
    pub min_height: f64,
    pub max_height: f64,
    pub height_jitter: f64,
    pub min_spurious: usize,
    pub max_spurious: usize,
    pub max_spurious_height: f64,
    pub mass_decay: f64,
}

impl Default for SynthParams {
    fn default() -> Self {
        SynthConfig::default().into()
    }
}

impl From<SynthConfig> for SynthParams {
    fn from(c: SynthConfig) -> Self {
        Self {
            n_classes: c.n_classes,
            train_per_class: c.train_per_class,
            test_per_class: c.test_per_class,
            seed: c.seed,
            min_peaks: c.min_peaks,
            max_peaks: c.max_peaks,
            min_height: c.min_height,
            max_height: c.max_height,
            height_jitter: c.height_jitter,
            min_spurious: c.min_spurious,
            max_spurious: c.max_spurious,
            max_spurious_height: c.max_spurious_height,
            mass_decay: c.mass_decay,
        }
    }
}

impl From<&SynthParams> for SynthConfig {
    fn from(p: &SynthParams) -> Self {
        Self {
            n_classes: p.n_classes,
            train_per_class: p.train_per_class,
            test_per_class: p.test_per_class,
            seed: p.seed,
            min_peaks: p.min_peaks,
            max_peaks: p.max_peaks,
            min_height: p.min_height,
            max_height: p.max_height,
            height_jitter: p.height_jitter,
            min_spurious: p.min_spurious,
            max_spurious: p.max_spurious,
            max_spurious_height: p.max_spurious_height,
            mass_decay: p.mass_decay,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaskRange {
    pub mz_lo: u32,
    pub mz_hi: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridParams {
    pub learning_rates: Vec<f64>,
    pub momenta: Vec<f64>,
    pub epsilon: f64,
}

impl Default for GridParams {
    fn default() -> Self {
        let g = HyperGrid::default();
        let mut learning_rates: Vec<f64> = Vec::new();
        let mut momenta: Vec<f64> = Vec::new();
        for c in g.cells() {
            if !learning_rates.contains(&c.learning_rate) {
                learning_rates.push(c.learning_rate);
            }
            if !momenta.contains(&c.momentum) {
                momenta.push(c.momentum);
            }
        }
        Self { learning_rates, momenta, epsilon: g.epsilon() }
    }
}

impl GridParams {
    /// Cells in learning-rate-major order.
    pub fn grid(&self) -> Result<HyperGrid, ConfigError> {
        if let Some(lr) = self.learning_rates.iter().find(|lr| !(lr.is_finite() && **lr > 0.0)) {
            return Err(ConfigError::Invalid(format!("learning rate {lr} must be positive")));
        }
        if let Some(m) = self.momenta.iter().find(|m| !(0.0..1.0).contains(*m)) {
            return Err(ConfigError::Invalid(format!("momentum {m} must be in [0, 1)")));
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(ConfigError::Invalid(format!("epsilon {} must be in [0, 1]", self.epsilon)));
        }
        let cells = self
            .learning_rates
            .iter()
            .flat_map(|&learning_rate| self.momenta.iter().map(move |&momentum| HyperCell { learning_rate, momentum }))
            .collect();
        HyperGrid::new(cells, self.epsilon).ok_or_else(|| ConfigError::Invalid("grid needs at least one cell".into()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnnParams {
    pub max_epochs: usize,
    pub target_train_accuracy: f64,
    pub noise_level: f64,
    pub target_patience: usize,
}

impl Default for AnnParams {
    fn default() -> Self {
        let t = TrainConfig::default();
        Self {
            max_epochs: t.max_epochs,
            target_train_accuracy: t.target_train_accuracy,
            noise_level: t.noise_level,
            target_patience: t.target_patience,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BandwidthParam {
    Fixed(f64),
    Named(BandwidthName),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BandwidthName {
    Auto,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParzenParams {
    pub replicas: usize,
    pub noise_level: f64,
    pub bandwidth: BandwidthParam,
    /// Candidate widths for `"auto"`; defaults to 10 log-spaced values in [0.01, 1].
    pub bandwidth_grid: Option<Vec<f64>>,
}

impl Default for ParzenParams {
    fn default() -> Self {
        let p = ParzenSettings::default();
        Self {
            replicas: p.replicas,
            noise_level: p.noise_level,
            bandwidth: BandwidthParam::Named(BandwidthName::Auto),
            bandwidth_grid: None,
        }
    }
}

impl ParzenParams {
    pub fn settings(&self) -> Result<ParzenSettings, ConfigError> {
        if !(0.0..=1.0).contains(&self.noise_level) {
            return Err(ConfigError::Invalid(format!("parzen noise_level {} must be in [0, 1]", self.noise_level)));
        }
        let bandwidth = match self.bandwidth {
            BandwidthParam::Fixed(h) if h.is_finite() && h > 0.0 => Bandwidth::Fixed(h),
            BandwidthParam::Fixed(h) => return Err(ConfigError::Invalid(format!("bandwidth {h} must be positive"))),
            BandwidthParam::Named(BandwidthName::Auto) => {
                Bandwidth::Auto(self.bandwidth_grid.clone().unwrap_or_else(Bandwidth::default_grid))
            }
        };
        Ok(ParzenSettings { replicas: self.replicas, noise_level: self.noise_level, bandwidth })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub dataset: DatasetSource,
    pub seeds: Vec<u64>,
    pub noise_levels: Vec<f64>,
    pub mask: MaskRange,
    pub grid: GridParams,
    pub ann: AnnParams,
    pub parzen: ParzenParams,
    pub output_dir: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let p = ProtocolConfig::default();
        Self {
            dataset: DatasetSource::Synth(SynthParams::default()),
            seeds: p.seeds,
            noise_levels: p.noise_levels,
            mask: MaskRange { mz_lo: p.mask.mz_lo(), mz_hi: p.mask.mz_hi() },
            grid: GridParams::default(),
            ann: AnnParams::default(),
            parzen: ParzenParams::default(),
            output_dir: None,
        }
    }
}

impl RunConfig {
    /// Reads a config file; relative paths inside it are resolved against
    /// the file's directory.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
        let mut cfg: RunConfig =
            serde_json::from_str(&text).map_err(|source| ConfigError::Parse { path: path.to_path_buf(), source })?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        if let DatasetSource::Manifest(m) = &mut cfg.dataset {
            *m = base.join(&*m);
        }
        if let Some(dir) = &mut cfg.output_dir {
            *dir = base.join(&*dir);
        }
        Ok(cfg)
    }

    pub fn train_config(&self, seed: u64) -> Result<TrainConfig, ConfigError> {
        let cfg = TrainConfig {
            max_epochs: self.ann.max_epochs,
            target_train_accuracy: self.ann.target_train_accuracy,
            noise_level: self.ann.noise_level,
            seed,
            grid: self.grid.grid()?,
            target_patience: self.ann.target_patience,
        };
        cfg.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        Ok(cfg)
    }

    pub fn protocol(&self) -> Result<ProtocolConfig, ConfigError> {
        if self.seeds.is_empty() {
            return Err(ConfigError::Invalid("seeds must not be empty".into()));
        }
        if let Some(l) = self.noise_levels.iter().find(|l| !(0.0..=1.0).contains(*l)) {
            return Err(ConfigError::Invalid(format!("noise level {l} must be in [0, 1]")));
        }
        let mask = MaskSpec::new(self.mask.mz_lo, self.mask.mz_hi).map_err(|e| ConfigError::Invalid(e.to_string()))?;
        Ok(ProtocolConfig {
            seeds: self.seeds.clone(),
            noise_levels: self.noise_levels.clone(),
            mask,
            // The protocol substitutes each run seed.
            ann: self.train_config(0)?,
            parzen: self.parzen.settings()?,
        })
    }
}
