//! Spectrum text files and dataset manifests.
//!
//! A spectrum file holds one `m/z,intensity` (or whitespace separated) pair
//! per line with `#` comments; it is binned to unit m/z and base-peak
//! normalized on load. A file whose first non-blank character is `{` is read
//! as an interchange record instead and taken as is.
//!
//! A manifest is a JSON array of `{"path", "label", "role"}` entries. Paths
//! are relative to the manifest's directory; the label catalogue follows the
//! order in which names first appear.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use specid_core::spectra::{
    bin_peaks, parse_spectrum, synth_dataset, BinnedSpectrum, ClassId, DatasetError, LabeledDataset, Role,
    SpectrumError, SynthConfig, MZ_START,
};
use thiserror::Error;

use crate::record::{RecordError, SpectrumRecord};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Spectrum { path: PathBuf, source: SpectrumError },
    #[error("{path}: {source}")]
    Record { path: PathBuf, source: RecordError },
    #[error("{path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("{path}: manifest has no training entries")]
    NoTraining { path: PathBuf },
    #[error("dataset: {0}")]
    Dataset(#[from] DatasetError),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> IoError + '_ {
    move |source| IoError::Io { path: path.to_path_buf(), source }
}

/// Reads a peak list or interchange record into a binned spectrum.
pub fn read_spectrum_file(path: &Path) -> Result<BinnedSpectrum, IoError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    spectrum_from_text(&text).map_err(|e| match e {
        TextError::Spectrum(source) => IoError::Spectrum { path: path.to_path_buf(), source },
        TextError::Record(source) => IoError::Record { path: path.to_path_buf(), source },
        TextError::Json(source) => IoError::Json { path: path.to_path_buf(), source },
    })
}

#[derive(Debug)]
enum TextError {
    Spectrum(SpectrumError),
    Record(RecordError),
    Json(serde_json::Error),
}

fn spectrum_from_text(text: &str) -> Result<BinnedSpectrum, TextError> {
    if text.trim_start().starts_with('{') {
        let record: SpectrumRecord = serde_json::from_str(text).map_err(TextError::Json)?;
        return record.to_spectrum().map_err(TextError::Record);
    }
    let peaks = parse_spectrum(text).map_err(TextError::Spectrum)?;
    bin_peaks(&peaks).and_then(|s| s.normalize()).map_err(TextError::Spectrum)
}

/// Writes the non-zero bins of `s` as a peak list that reads back exactly.
pub fn write_spectrum_file(path: &Path, s: &BinnedSpectrum, title: &str) -> Result<(), IoError> {
    let mut out = format!("# {title}\n# m/z,intensity\n");
    for (i, v) in s.intensities().iter().enumerate().filter(|(_, v)| **v > 0.0) {
        out.push_str(&format!("{},{}\n", MZ_START as usize + i, v));
    }
    fs::write(path, out).map_err(io_err(path))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ManifestRole {
    Train,
    Test,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub path: String,
    pub label: String,
    pub role: ManifestRole,
}

/// Training and (optional) test sets sharing one label catalogue.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub train: LabeledDataset,
    pub test: Option<LabeledDataset>,
}

pub fn load_manifest(path: &Path) -> Result<Corpus, IoError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let entries: Vec<ManifestEntry> =
        serde_json::from_str(&text).map_err(|source| IoError::Json { path: path.to_path_buf(), source })?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));

    let mut labels: Vec<String> = Vec::new();
    let mut train = Vec::new();
    let mut test = Vec::new();
    for e in &entries {
        let class = match labels.iter().position(|l| *l == e.label) {
            Some(i) => i,
            None => {
                labels.push(e.label.clone());
                labels.len() - 1
            }
        };
        let s = read_spectrum_file(&base.join(&e.path))?;
        match e.role {
            ManifestRole::Train => train.push((s, ClassId(class))),
            ManifestRole::Test => test.push((s, ClassId(class))),
        }
    }
    if train.is_empty() {
        return Err(IoError::NoTraining { path: path.to_path_buf() });
    }
    let test = if test.is_empty() { None } else { Some(LabeledDataset::new(Role::Test, labels.clone(), test)?) };
    Ok(Corpus { train: LabeledDataset::new(Role::Train, labels, train)?, test })
}

/// Generates the synthetic corpus described by `cfg` under `dir` as spectrum
/// files plus `manifest.json`; returns the manifest path.
pub fn write_synth(dir: &Path, cfg: &SynthConfig) -> Result<PathBuf, IoError> {
    let (train, test) = synth_dataset(cfg)?;
    let spectra = dir.join("spectra");
    fs::create_dir_all(&spectra).map_err(io_err(&spectra))?;
    let mut entries = Vec::with_capacity(train.len() + test.len());
    for (data, role, tag) in [(&train, ManifestRole::Train, "train"), (&test, ManifestRole::Test, "test")] {
        let mut seen = vec![0usize; data.n_classes()];
        for (s, c) in data.items() {
            let label = &data.labels()[c.0];
            let name = format!("{label}_{tag}{}.txt", seen[c.0]);
            seen[c.0] += 1;
            write_spectrum_file(&spectra.join(&name), s, label)?;
            entries.push(ManifestEntry { path: format!("spectra/{name}"), label: label.clone(), role });
        }
    }
    let manifest = dir.join("manifest.json");
    let json = serde_json::to_string_pretty(&entries).expect("manifest serializes");
    fs::write(&manifest, json + "\n").map_err(io_err(&manifest))?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_forms() {
        let s = spectrum_from_text("# hdr\n60 5.0\n118,10\n").unwrap();
        assert_eq!(s.intensities()[68], 1.0);
        assert_eq!(s.intensities()[10], 0.5);
        let mut rec = SpectrumRecord { mz_start: 50, mz_end: 350, intensities: vec![0.0; 301] };
        rec.intensities[0] = 2.0;
        // Records are taken as is, not renormalized.
        let s = spectrum_from_text(&serde_json::to_string(&rec).unwrap()).unwrap();
        assert_eq!(s.intensities()[0], 2.0);
        assert!(matches!(
            spectrum_from_text("60,-1"),
            Err(TextError::Spectrum(SpectrumError::NegativeIntensity { line: 1 }))
        ));
    }
}
