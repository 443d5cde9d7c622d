//! Classification over a loaded bundle, shared by the library API, the CLI
//! and the HTTP service so all three give identical answers.

use serde::{Deserialize, Serialize};
use specid_core::spectra::BinnedSpectrum;
use thiserror::Error;

use crate::persist::ModelBundle;

/// Alternatives reported per classifier.
pub const TOP_K: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Choice {
    Ann,
    Parzen,
    Both,
}

#[derive(Debug, Error, PartialEq)]
pub enum EngineError {
    #[error("the bundle has no {0} model")]
    Unavailable(&'static str),
    #[error("{0}")]
    Classifier(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ranked {
    pub label: String,
    pub index: usize,
    pub score: f64,
}

/// Winning class and the best [`TOP_K`] alternatives by descending score.
/// Scores are output activations for the network and posteriors for the
/// Parzen classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub label: String,
    pub index: usize,
    pub score: f64,
    pub top: Vec<Ranked>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifyResponse {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ann: Option<Prediction>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parzen: Option<Prediction>,
}

#[derive(Debug, Clone)]
pub struct Engine {
    bundle: ModelBundle,
}

impl Engine {
    pub fn new(bundle: ModelBundle) -> Self {
        Self { bundle }
    }

    pub fn bundle(&self) -> &ModelBundle {
        &self.bundle
    }

    pub fn labels(&self) -> &[String] {
        self.bundle.labels()
    }

    /// Classifies `s` as given; callers are expected to submit base-peak
    /// normalized intensities.
    pub fn classify(&self, s: &BinnedSpectrum, choice: Choice) -> Result<ClassifyResponse, EngineError> {
        let want_ann = matches!(choice, Choice::Ann | Choice::Both);
        let want_parzen = matches!(choice, Choice::Parzen | Choice::Both);
        let x = s.intensities();

        let ann = if want_ann {
            let net = self.bundle.ann().ok_or(EngineError::Unavailable("ann"))?;
            let r = net.classify(x).map_err(|e| EngineError::Classifier(e.to_string()))?;
            Some(self.rank(r.scores.iter().copied().enumerate()))
        } else {
            None
        };
        let parzen = if want_parzen {
            let model = self.bundle.parzen().ok_or(EngineError::Unavailable("parzen"))?;
            let (_, post) = model.classify(x).map_err(|e| EngineError::Classifier(e.to_string()))?;
            Some(self.rank(post.into_iter().map(|(c, p)| (c.0, p))))
        } else {
            None
        };
        Ok(ClassifyResponse { ann, parzen })
    }

    /// Sorts by descending score; equal scores keep ascending class order,
    /// matching the classifiers' lowest-index tie rule.
    fn rank(&self, scores: impl Iterator<Item = (usize, f64)>) -> Prediction {
        let mut all: Vec<(usize, f64)> = scores.collect();
        all.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        let top: Vec<Ranked> = all
            .iter()
            .take(TOP_K)
            .map(|&(index, score)| Ranked { label: self.labels()[index].clone(), index, score })
            .collect();
        let best = top[0].clone();
        Prediction { label: best.label, index: best.index, score: best.score, top }
    }
}
