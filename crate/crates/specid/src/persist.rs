//! Model bundle files.
//!
//! A bundle is one JSON document holding the label catalogue and either or
//! both trained models. `checksum` is the lowercase hex SHA-256 of the
//! compact serialization of the same document with `checksum` set to `""`.
//! Floats are written in shortest round-trip form, so weights reload
//! bit-for-bit.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use specid_core::ann::{Dims, HyperCell, HyperGrid, Network};
use specid_core::parzen::ParzenModel;
use specid_core::spectra::{ClassId, MAX_CLASSES, N_BINS};
use thiserror::Error;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum BundleError {
    #[error("unsupported format_version {found} (expected {expected})")]
    VersionMismatch { found: u64, expected: u32 },
    #[error("corrupted bundle: {0}")]
    CorruptedBundle(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid bundle: {0}")]
    Invalid(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

/// Grid cell state recorded with a trained network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridCellState {
    pub learning_rate: f64,
    pub momentum: f64,
    pub value: f64,
    pub visits: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnMetadata {
    pub seed: u64,
    pub epochs: usize,
    pub reached_target: bool,
    /// Best per-epoch accuracy on the noisy training inputs.
    pub best_noisy_accuracy: f64,
    pub noise_level: f64,
    pub epsilon: f64,
    pub grid: Vec<GridCellState>,
}

impl AnnMetadata {
    pub fn grid_state(grid: &HyperGrid) -> Vec<GridCellState> {
        grid.cells()
            .iter()
            .zip(grid.values())
            .zip(grid.visits())
            .map(|((c, v), n)| GridCellState {
                learning_rate: c.learning_rate,
                momentum: c.momentum,
                value: *v,
                visits: *n,
            })
            .collect()
    }

    /// Rebuilds the controller state the network was trained with.
    pub fn hyper_grid(&self) -> Option<HyperGrid> {
        let cells =
            self.grid.iter().map(|c| HyperCell { learning_rate: c.learning_rate, momentum: c.momentum }).collect();
        let values = self.grid.iter().map(|c| c.value).collect();
        let visits = self.grid.iter().map(|c| c.visits).collect();
        HyperGrid::with_state(cells, self.epsilon, values, visits)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParzenMetadata {
    pub seed: u64,
    /// Noisy copies stored per training spectrum.
    pub replicas: usize,
    pub noise_level: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnDocument {
    pub format_version: u32,
    pub dims: [usize; 3],
    #[serde(rename = "W1")]
    pub w1: Vec<Vec<f64>>,
    pub b1: Vec<f64>,
    #[serde(rename = "W2")]
    pub w2: Vec<Vec<f64>>,
    pub b2: Vec<f64>,
    pub training_metadata: AnnMetadata,
}

/// `classes[i]` has prior `priors[i]` and stored vectors `vectors[i]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParzenDocument {
    pub format_version: u32,
    pub bandwidth: f64,
    pub classes: Vec<usize>,
    pub priors: Vec<f64>,
    pub vectors: Vec<Vec<Vec<f64>>>,
    pub training_metadata: ParzenMetadata,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BundleDocument {
    format_version: u32,
    checksum: String,
    labels: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    ann: Option<AnnDocument>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    parzen: Option<ParzenDocument>,
}

/// Trained models plus the 45-entry label catalogue.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelBundle {
    labels: Vec<String>,
    ann: Option<(Network, AnnMetadata)>,
    parzen: Option<(ParzenModel, ParzenMetadata)>,
}

/// Placeholder name for catalogue slots no training class occupies.
pub fn unused_label(i: usize) -> String {
    format!("unused-{:02}", i + 1)
}

impl ModelBundle {
    /// Catalogues shorter than 45 are padded with [`unused_label`] so the
    /// catalogue matches the network's output layer.
    pub fn new(
        labels: &[String],
        ann: Option<(Network, AnnMetadata)>,
        parzen: Option<(ParzenModel, ParzenMetadata)>,
    ) -> Result<Self, BundleError> {
        if ann.is_none() && parzen.is_none() {
            return Err(BundleError::Invalid("a bundle needs at least one model".into()));
        }
        if labels.len() > MAX_CLASSES {
            return Err(BundleError::Invalid(format!("{} labels, at most {MAX_CLASSES} allowed", labels.len())));
        }
        let mut labels = labels.to_vec();
        for i in labels.len()..MAX_CLASSES {
            let name = unused_label(i);
            if labels.contains(&name) {
                return Err(BundleError::Invalid(format!("label {name:?} is reserved")));
            }
            labels.push(name);
        }
        if let Some((net, _)) = &ann {
            if net.dims() != Dims::SPECTRAL {
                let d = net.dims();
                return Err(BundleError::DimensionMismatch(format!(
                    "network is {}-{}-{}, expected {N_BINS}-20-{MAX_CLASSES}",
                    d.input, d.hidden, d.output
                )));
            }
        }
        if let Some((m, _)) = &parzen {
            if m.dim() != N_BINS {
                return Err(BundleError::DimensionMismatch(format!(
                    "Parzen vectors have {} bins, expected {N_BINS}",
                    m.dim()
                )));
            }
            if let Some(c) = m.classes().find(|c| c.0 >= MAX_CLASSES) {
                return Err(BundleError::Invalid(format!("Parzen class {} outside the catalogue", c.0)));
            }
        }
        Ok(Self { labels, ann, parzen })
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn ann(&self) -> Option<&Network> {
        self.ann.as_ref().map(|(n, _)| n)
    }

    pub fn ann_metadata(&self) -> Option<&AnnMetadata> {
        self.ann.as_ref().map(|(_, m)| m)
    }

    pub fn parzen(&self) -> Option<&ParzenModel> {
        self.parzen.as_ref().map(|(p, _)| p)
    }

    pub fn parzen_metadata(&self) -> Option<&ParzenMetadata> {
        self.parzen.as_ref().map(|(_, m)| m)
    }

    fn document(&self) -> BundleDocument {
        BundleDocument {
            format_version: FORMAT_VERSION,
            checksum: String::new(),
            labels: self.labels.clone(),
            ann: self.ann.as_ref().map(|(n, m)| ann_document(n, m)),
            parzen: self.parzen.as_ref().map(|(p, m)| parzen_document(p, m)),
        }
    }

    /// Compact JSON with the checksum filled in.
    pub fn to_json(&self) -> String {
        let mut doc = self.document();
        doc.checksum = checksum(&doc);
        serde_json::to_string(&doc).expect("bundle serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, BundleError> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| BundleError::CorruptedBundle(format!("not valid JSON: {e}")))?;
        let version = value
            .get("format_version")
            .and_then(serde_json::Value::as_u64)
            .ok_or_else(|| BundleError::CorruptedBundle("missing format_version".into()))?;
        if version != FORMAT_VERSION as u64 {
            return Err(BundleError::VersionMismatch { found: version, expected: FORMAT_VERSION });
        }
        let doc: BundleDocument =
            serde_json::from_value(value).map_err(|e| BundleError::CorruptedBundle(e.to_string()))?;
        let mut blank = doc.clone();
        blank.checksum = String::new();
        if checksum(&blank) != doc.checksum {
            return Err(BundleError::CorruptedBundle("checksum mismatch".into()));
        }
        if doc.labels.len() != MAX_CLASSES {
            return Err(BundleError::DimensionMismatch(format!(
                "label catalogue has {} entries, expected {MAX_CLASSES}",
                doc.labels.len()
            )));
        }
        let ann = doc.ann.map(ann_from_document).transpose()?;
        let parzen = doc.parzen.map(parzen_from_document).transpose()?;
        Self::new(&doc.labels, ann, parzen)
    }

    pub fn save(&self, path: &Path) -> Result<(), BundleError> {
        fs::write(path, self.to_json() + "\n").map_err(|source| BundleError::Io { path: path.to_path_buf(), source })
    }

    pub fn load(path: &Path) -> Result<Self, BundleError> {
        let text = fs::read_to_string(path).map_err(|source| BundleError::Io { path: path.to_path_buf(), source })?;
        Self::from_json(&text)
    }
}

/// SHA-256 of the compact JSON with `checksum` set to `""` and object keys
/// sorted, so any JSON library can recompute it.
fn checksum(doc: &BundleDocument) -> String {
    let canonical = serde_json::to_value(doc).expect("bundle serializes");
    let bytes = serde_json::to_vec(&canonical).expect("bundle serializes");
    hex::encode(Sha256::digest(&bytes))
}

fn rows(flat: &[f64], width: usize) -> Vec<Vec<f64>> {
    flat.chunks(width).map(<[f64]>::to_vec).collect()
}

fn ann_document(net: &Network, meta: &AnnMetadata) -> AnnDocument {
    let d = net.dims();
    AnnDocument {
        format_version: FORMAT_VERSION,
        dims: [d.input, d.hidden, d.output],
        w1: rows(net.w1(), d.input),
        b1: net.b1().to_vec(),
        w2: rows(net.w2(), d.hidden),
        b2: net.b2().to_vec(),
        training_metadata: meta.clone(),
    }
}

fn flatten(name: &str, m: Vec<Vec<f64>>, n_rows: usize, width: usize) -> Result<Vec<f64>, BundleError> {
    if m.len() != n_rows || m.iter().any(|r| r.len() != width) {
        return Err(BundleError::DimensionMismatch(format!("{name} must be {n_rows}x{width}")));
    }
    Ok(m.into_iter().flatten().collect())
}

fn ann_from_document(doc: AnnDocument) -> Result<(Network, AnnMetadata), BundleError> {
    if doc.format_version != FORMAT_VERSION {
        return Err(BundleError::VersionMismatch { found: doc.format_version.into(), expected: FORMAT_VERSION });
    }
    let d = Dims::SPECTRAL;
    if doc.dims != [d.input, d.hidden, d.output] {
        return Err(BundleError::DimensionMismatch(format!(
            "network dims {:?}, expected [{}, {}, {}]",
            doc.dims, d.input, d.hidden, d.output
        )));
    }
    let w1 = flatten("W1", doc.w1, d.hidden, d.input)?;
    let w2 = flatten("W2", doc.w2, d.output, d.hidden)?;
    if doc.b1.len() != d.hidden || doc.b2.len() != d.output {
        return Err(BundleError::DimensionMismatch("bias length".into()));
    }
    let net =
        Network::from_parts(d, w1, doc.b1, w2, doc.b2).map_err(|e| BundleError::CorruptedBundle(e.to_string()))?;
    Ok((net, doc.training_metadata))
}

fn parzen_document(model: &ParzenModel, meta: &ParzenMetadata) -> ParzenDocument {
    let classes: Vec<ClassId> = model.classes().collect();
    ParzenDocument {
        format_version: FORMAT_VERSION,
        bandwidth: model.bandwidth(),
        classes: classes.iter().map(|c| c.0).collect(),
        priors: classes.iter().map(|c| model.prior(*c).expect("class present")).collect(),
        vectors: classes.iter().map(|c| model.samples(*c).expect("class present").to_vec()).collect(),
        training_metadata: meta.clone(),
    }
}

fn parzen_from_document(doc: ParzenDocument) -> Result<(ParzenModel, ParzenMetadata), BundleError> {
    if doc.format_version != FORMAT_VERSION {
        return Err(BundleError::VersionMismatch { found: doc.format_version.into(), expected: FORMAT_VERSION });
    }
    if doc.classes.len() != doc.priors.len() || doc.classes.len() != doc.vectors.len() {
        return Err(BundleError::DimensionMismatch("classes, priors and vectors differ in length".into()));
    }
    if let Some(v) = doc.vectors.iter().flatten().find(|v| v.len() != N_BINS) {
        return Err(BundleError::DimensionMismatch(format!("stored vector has {} bins, expected {N_BINS}", v.len())));
    }
    let classes =
        doc.classes.into_iter().zip(doc.priors).zip(doc.vectors).map(|((c, p), v)| (ClassId(c), p, v)).collect();
    let model =
        ParzenModel::from_stored(doc.bandwidth, classes).map_err(|e| BundleError::CorruptedBundle(e.to_string()))?;
    Ok((model, doc.training_metadata))
}
