//! Bayes classification over Parzen-window class densities.
//!
//! Each class-conditional density is estimated as the average of isotropic
//! Gaussian kernels of width `h` centred on that class's stored training
//! vectors:
//!
//! ```text
//! log p(x|c) = logsumexp_j( -|x - x_j|² / 2h² ) - ln n_c - d·ln(h·sqrt(2π))
//! ```
//!
//! In 301 dimensions the linear-space kernel underflows for any realistic
//! distance, so everything here stays in the log domain.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use thiserror::Error;

use crate::spectra::{ClassId, LabeledDataset};

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParzenError {
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("training spectrum {0} is not base-peak normalized")]
    NotNormalized(usize),
    #[error("bandwidth must be positive and finite, got {0}")]
    InvalidBandwidth(f64),
    #[error("bandwidth grid is empty")]
    EmptyGrid,
    #[error("bandwidth selection needs at least 2 samples")]
    TooFewSamples,
    #[error("class {0} is not in the model")]
    UnknownClass(usize),
    #[error("query has dimension {found}, model expects {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("every class density underflowed; bandwidth is degenerate")]
    DegenerateBandwidth,
    #[error("inconsistent model: {0}")]
    Inconsistent(&'static str),
}

/// Numerically stable `ln Σ exp(v)`. Returns `-inf` for an empty slice or
/// when every term is `-inf`.
pub fn logsumexp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY || max.is_nan() {
        return max;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    let sum: f64 = values.iter().map(|v| libm::exp(v - max)).sum();
    max + libm::log(sum)
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// How to pick the kernel width at fit time.
#[derive(Debug, Clone, PartialEq)]
pub enum Bandwidth {
    Fixed(f64),
    /// Leave-one-out likelihood over the given grid.
    Auto(Vec<f64>),
}

impl Bandwidth {
    /// Ten log-spaced values from 0.01 to 1.
    pub fn default_grid() -> Vec<f64> {
        log_grid(0.01, 1.0, 10)
    }
}

/// `n` log-spaced points from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return alloc::vec![lo];
    }
    let (a, b) = (libm::log(lo), libm::log(hi));
    (0..n).map(|i| libm::exp(a + (b - a) * i as f64 / (n - 1) as f64)).collect()
}

/// Result of a bandwidth search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandwidthChoice {
    pub h: f64,
    /// Set when every sample coincides and the likelihood is unbounded; `h`
    /// is then the smallest grid value.
    pub degenerate: bool,
}

/// Picks the grid value maximizing the leave-one-out log-likelihood of
/// `samples` under the pooled (class-blind) Parzen estimate. Ties go to the
/// smaller bandwidth.
pub fn select_bandwidth<S: AsRef<[f64]>>(samples: &[S], grid: &[f64]) -> Result<BandwidthChoice, ParzenError> {
    if grid.is_empty() {
        return Err(ParzenError::EmptyGrid);
    }
    if let Some(&h) = grid.iter().find(|h| !(h.is_finite() && **h > 0.0)) {
        return Err(ParzenError::InvalidBandwidth(h));
    }
    let n = samples.len();
    if n < 2 {
        return Err(ParzenError::TooFewSamples);
    }
    let d = samples[0].as_ref().len();
    if let Some(s) = samples.iter().find(|s| s.as_ref().len() != d) {
        return Err(ParzenError::DimensionMismatch { expected: d, found: s.as_ref().len() });
    }
    let smallest = grid.iter().copied().fold(f64::INFINITY, f64::min);

    // Pairwise squared distances, upper triangle, row-major.
    let mut dist = alloc::vec![0.0; n * n];
    let mut all_identical = true;
    for i in 0..n {
        for j in (i + 1)..n {
            let v = squared_distance(samples[i].as_ref(), samples[j].as_ref());
            all_identical &= v == 0.0;
            dist[i * n + j] = v;
            dist[j * n + i] = v;
        }
    }
    if all_identical {
        return Ok(BandwidthChoice { h: smallest, degenerate: true });
    }

    let mut terms = Vec::with_capacity(n - 1);
    let scored = grid.iter().map(|&h| {
        let inv = 1.0 / (2.0 * h * h);
        let norm = libm::log((n - 1) as f64) + d as f64 * (libm::log(h) + LN_SQRT_2PI);
        let mut total = 0.0;
        for i in 0..n {
            terms.clear();
            terms.extend((0..n).filter(|&j| j != i).map(|j| -dist[i * n + j] * inv));
            total += logsumexp(&terms) - norm;
        }
        (h, total)
    });
    let best = best_scored(scored);
    Ok(BandwidthChoice { h: best.expect("grid is non-empty"), degenerate: false })
}

/// Highest score wins; equal scores go to the smaller bandwidth.
fn best_scored(scored: impl Iterator<Item = (f64, f64)>) -> Option<f64> {
    let mut best: Option<(f64, f64)> = None;
    for (h, score) in scored {
        let better = match best {
            None => true,
            Some((bh, bs)) => score > bs || (score == bs && h < bh),
        };
        if better {
            best = Some((h, score));
        }
    }
    best.map(|(h, _)| h)
}

#[derive(Debug, Clone, PartialEq)]
struct ClassSamples {
    class: ClassId,
    prior: f64,
    samples: Vec<Vec<f64>>,
}

/// Stored training vectors per class, kernel width and class priors.
#[derive(Debug, Clone, PartialEq)]
pub struct ParzenModel {
    dim: usize,
    bandwidth: f64,
    classes: Vec<ClassSamples>,
}

impl ParzenModel {
    /// Fits on a labelled training set of base-peak normalized spectra.
    pub fn fit(train: &LabeledDataset, bandwidth: &Bandwidth) -> Result<Self, ParzenError> {
        if let Some(i) = train.items().iter().position(|(s, _)| !s.is_normalized()) {
            return Err(ParzenError::NotNormalized(i));
        }
        Self::fit_vectors(train.items().iter().map(|(s, c)| (s.intensities(), *c)), bandwidth)
    }

    /// Fits on arbitrary equal-length vectors. Priors are class frequencies.
    pub fn fit_vectors<'a, I>(samples: I, bandwidth: &Bandwidth) -> Result<Self, ParzenError>
    where
        I: IntoIterator<Item = (&'a [f64], ClassId)>,
    {
        let mut grouped: BTreeMap<ClassId, Vec<Vec<f64>>> = BTreeMap::new();
        let mut dim = None;
        let mut total = 0usize;
        for (x, c) in samples {
            let d = *dim.get_or_insert(x.len());
            if x.len() != d {
                return Err(ParzenError::DimensionMismatch { expected: d, found: x.len() });
            }
            grouped.entry(c).or_default().push(x.to_vec());
            total += 1;
        }
        let dim = dim.ok_or(ParzenError::EmptyTrainingSet)?;
        let h = match bandwidth {
            Bandwidth::Fixed(h) => *h,
            Bandwidth::Auto(grid) => {
                let pooled: Vec<&[f64]> = grouped.values().flatten().map(|v| v.as_slice()).collect();
                select_bandwidth(&pooled, grid)?.h
            }
        };
        let classes = grouped
            .into_iter()
            .map(|(class, samples)| ClassSamples { class, prior: samples.len() as f64 / total as f64, samples })
            .collect();
        Self::from_parts(dim, h, classes)
    }

    /// Assembles a model from persisted parts, re-checking every invariant.
    /// Priors are renormalized to sum to one.
    pub fn from_stored(bandwidth: f64, classes: Vec<(ClassId, f64, Vec<Vec<f64>>)>) -> Result<Self, ParzenError> {
        let dim = classes
            .iter()
            .flat_map(|(_, _, s)| s.first())
            .map(|v| v.len())
            .next()
            .ok_or(ParzenError::EmptyTrainingSet)?;
        let classes =
            classes.into_iter().map(|(class, prior, samples)| ClassSamples { class, prior, samples }).collect();
        Self::from_parts(dim, bandwidth, classes)
    }

    fn from_parts(dim: usize, bandwidth: f64, mut classes: Vec<ClassSamples>) -> Result<Self, ParzenError> {
        if !(bandwidth.is_finite() && bandwidth > 0.0) {
            return Err(ParzenError::InvalidBandwidth(bandwidth));
        }
        if classes.is_empty() {
            return Err(ParzenError::EmptyTrainingSet);
        }
        classes.sort_by_key(|c| c.class);
        if classes.windows(2).any(|w| w[0].class == w[1].class) {
            return Err(ParzenError::Inconsistent("duplicate class"));
        }
        for c in &classes {
            if c.samples.is_empty() {
                return Err(ParzenError::Inconsistent("class without samples"));
            }
            if !(c.prior.is_finite() && c.prior > 0.0) {
                return Err(ParzenError::Inconsistent("prior must be positive"));
            }
            if let Some(v) = c.samples.iter().find(|v| v.len() != dim) {
                return Err(ParzenError::DimensionMismatch { expected: dim, found: v.len() });
            }
        }
        let sum: f64 = classes.iter().map(|c| c.prior).sum();
        if (sum - 1.0).abs() > 1e-12 {
            classes.iter_mut().for_each(|c| c.prior /= sum);
        }
        Ok(Self { dim, bandwidth, classes })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn classes(&self) -> impl Iterator<Item = ClassId> + '_ {
        self.classes.iter().map(|c| c.class)
    }

    pub fn prior(&self, c: ClassId) -> Option<f64> {
        self.find(c).map(|s| s.prior)
    }

    /// Number of stored vectors over all classes.
    pub fn stored_samples(&self) -> usize {
        self.classes.iter().map(|c| c.samples.len()).sum()
    }

    pub fn samples(&self, c: ClassId) -> Option<&[Vec<f64>]> {
        self.find(c).map(|s| s.samples.as_slice())
    }

    fn find(&self, c: ClassId) -> Option<&ClassSamples> {
        self.classes.binary_search_by_key(&c, |s| s.class).ok().map(|i| &self.classes[i])
    }

    fn check_dim(&self, x: &[f64]) -> Result<(), ParzenError> {
        if x.len() != self.dim {
            return Err(ParzenError::DimensionMismatch { expected: self.dim, found: x.len() });
        }
        Ok(())
    }

    fn log_density_of(&self, class: &ClassSamples, x: &[f64]) -> f64 {
        let h = self.bandwidth;
        let inv = 1.0 / (2.0 * h * h);
        // Summation order is fixed: ascending sample index.
        let terms: Vec<f64> = class.samples.iter().map(|s| -squared_distance(x, s) * inv).collect();
        logsumexp(&terms) - libm::log(class.samples.len() as f64) - self.dim as f64 * (libm::log(h) + LN_SQRT_2PI)
    }

    /// Natural log of the Parzen estimate of `p(x | c)`.
    pub fn log_class_density(&self, x: &[f64], c: ClassId) -> Result<f64, ParzenError> {
        self.check_dim(x)?;
        let class = self.find(c).ok_or(ParzenError::UnknownClass(c.0))?;
        Ok(self.log_density_of(class, x))
    }

    /// Posterior class probabilities in ascending class order; they sum to one.
    pub fn posterior(&self, x: &[f64]) -> Result<Vec<(ClassId, f64)>, ParzenError> {
        self.check_dim(x)?;
        let joint: Vec<f64> = self.classes.iter().map(|c| libm::log(c.prior) + self.log_density_of(c, x)).collect();
        let evidence = logsumexp(&joint);
        if !evidence.is_finite() {
            return Err(ParzenError::DegenerateBandwidth);
        }
        let mut post: Vec<(ClassId, f64)> =
            self.classes.iter().zip(&joint).map(|(c, j)| (c.class, libm::exp(j - evidence))).collect();
        let total: f64 = post.iter().map(|(_, p)| p).sum();
        post.iter_mut().for_each(|(_, p)| *p /= total);
        Ok(post)
    }

    /// Maximum-posterior class; ties go to the lowest class index.
    pub fn classify(&self, x: &[f64]) -> Result<(ClassId, Vec<(ClassId, f64)>), ParzenError> {
        let post = self.posterior(x)?;
        let mut best = 0;
        for (i, (_, p)) in post.iter().enumerate() {
            if *p > post[best].1 {
                best = i;
            }
        }
        Ok((post[best].0, post))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn model(points: &[(&[f64], usize)], h: f64) -> ParzenModel {
        ParzenModel::fit_vectors(points.iter().map(|(x, c)| (*x, ClassId(*c))), &Bandwidth::Fixed(h)).unwrap()
    }

    #[test]
    fn logsumexp_identities() {
        assert_eq!(logsumexp(&[]), f64::NEG_INFINITY);
        let a = -1234.5;
        assert!((logsumexp(&[a, a]) - (a + core::f64::consts::LN_2)).abs() < 1e-12);
        assert_eq!(logsumexp(&[f64::NEG_INFINITY, 0.0]), 0.0);
        assert!((logsumexp(&[0.0, 0.0, 0.0]) - libm::log(3.0)).abs() < 1e-15);
    }

    #[test]
    fn one_dimensional_kernel_at_centre() {
        let m = model(&[(&[0.0], 0)], 1.0);
        let v = m.log_class_density(&[0.0], ClassId(0)).unwrap();
        assert!((v - (-0.918_938_533_204_672_7)).abs() < 1e-12, "{v}");
    }

    #[test]
    fn two_dimensional_two_samples() {
        let m = model(&[(&[0.0, 0.0], 0), (&[1.0, 0.0], 0)], 1.0);
        let v = m.log_class_density(&[0.0, 0.0], ClassId(0)).unwrap();
        let pi = core::f64::consts::PI;
        let expected = libm::log(0.5 / (2.0 * pi) * (1.0 + libm::exp(-0.5)));
        assert!((v - expected).abs() < 1e-12);
    }

    #[test]
    fn priors_from_counts() {
        let m = model(&[(&[0.0], 0), (&[1.0], 0), (&[2.0], 0), (&[3.0], 1)], 1.0);
        assert_eq!(m.prior(ClassId(0)), Some(0.75));
        assert_eq!(m.prior(ClassId(1)), Some(0.25));
    }

    #[test]
    fn empty_training_set() {
        let none: [(&[f64], ClassId); 0] = [];
        assert_eq!(ParzenModel::fit_vectors(none, &Bandwidth::Fixed(1.0)), Err(ParzenError::EmptyTrainingSet));
    }

    #[test]
    fn unknown_class() {
        let m = model(&[(&[0.0], 0)], 1.0);
        assert_eq!(m.log_class_density(&[0.0], ClassId(3)), Err(ParzenError::UnknownClass(3)));
    }

    #[test]
    fn dimension_checked() {
        let m = model(&[(&[0.0, 1.0], 0)], 1.0);
        assert_eq!(m.posterior(&[0.0]), Err(ParzenError::DimensionMismatch { expected: 2, found: 1 }));
    }

    #[test]
    fn symmetric_classes_split_evenly() {
        let m = model(&[(&[0.2, 0.3], 0), (&[0.2, 0.3], 1)], 0.5);
        let post = m.posterior(&[0.9, 0.1]).unwrap();
        assert!((post[0].1 - 0.5).abs() < 1e-9 && (post[1].1 - 0.5).abs() < 1e-9);
        assert_eq!(m.classify(&[0.9, 0.1]).unwrap().0, ClassId(0));
    }

    #[test]
    fn single_class_posterior() {
        let m = model(&[(&[0.1], 4)], 0.3);
        assert_eq!(m.posterior(&[5.0]).unwrap(), vec![(ClassId(4), 1.0)]);
    }

    #[test]
    fn stored_point_dominates_when_far_from_others() {
        let m = model(&[(&[0.0, 0.0], 0), (&[10.0, 10.0], 1), (&[-10.0, 5.0], 2)], 0.5);
        let (label, post) = m.classify(&[0.0, 0.0]).unwrap();
        assert_eq!(label, ClassId(0));
        assert!(post[0].1 > 0.99);
    }

    #[test]
    fn tiny_bandwidth_underflow_reported() {
        let m = model(&[(&[0.0], 0), (&[1.0], 1)], 1e-300);
        assert_eq!(m.posterior(&[0.5]), Err(ParzenError::DegenerateBandwidth));
    }

    #[test]
    fn bandwidth_grid_of_one() {
        let pts: [&[f64]; 2] = [&[0.0], &[1.0]];
        assert_eq!(select_bandwidth(&pts, &[0.3]).unwrap(), BandwidthChoice { h: 0.3, degenerate: false });
    }

    #[test]
    fn bandwidth_tie_prefers_smaller() {
        assert_eq!(best_scored([(0.5, -3.0), (0.2, -3.0), (0.9, -4.0)].into_iter()), Some(0.2));
        assert_eq!(best_scored([(0.2, -3.0), (0.5, -3.0)].into_iter()), Some(0.2));
        assert_eq!(best_scored([(0.2, -3.0), (0.5, -2.0)].into_iter()), Some(0.5));
        let pts: [&[f64]; 3] = [&[0.0], &[1.0], &[2.5]];
        let a = select_bandwidth(&pts, &[0.1, 0.4, 2.0]).unwrap().h;
        let b = select_bandwidth(&pts, &[2.0, 0.4, 0.1]).unwrap().h;
        assert_eq!(a, b);
    }

    #[test]
    fn bandwidth_degenerate_samples() {
        let pts: [&[f64]; 3] = [&[0.5, 0.5], &[0.5, 0.5], &[0.5, 0.5]];
        let c = select_bandwidth(&pts, &[0.3, 0.1, 0.9]).unwrap();
        assert_eq!(c, BandwidthChoice { h: 0.1, degenerate: true });
    }

    #[test]
    fn bandwidth_errors() {
        let pts: [&[f64]; 1] = [&[0.0]];
        assert_eq!(select_bandwidth(&pts, &[0.1]), Err(ParzenError::TooFewSamples));
        let pts: [&[f64]; 2] = [&[0.0], &[1.0]];
        assert_eq!(select_bandwidth(&pts, &[]), Err(ParzenError::EmptyGrid));
        assert_eq!(select_bandwidth(&pts, &[-1.0]), Err(ParzenError::InvalidBandwidth(-1.0)));
    }

    #[test]
    fn default_grid_shape() {
        let g = Bandwidth::default_grid();
        assert_eq!(g.len(), 10);
        assert!((g[0] - 0.01).abs() < 1e-15 && (g[9] - 1.0).abs() < 1e-15);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
    }
}
