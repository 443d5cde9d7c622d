//! Binned electron-impact spectra over the integer m/z range 50..=350.
//!
//! A spectrum is a fixed 301-bin vector of non-negative relative abundances.
//! Raw peak lists are parsed by [`parse_spectrum`], accumulated into bins by
//! [`bin_peaks`] and scaled to a unit base peak by [`BinnedSpectrum::normalize`].
//! Experimental degradations (additive Gaussian noise, zero-filled m/z
//! windows) are pure transformations returning new spectra.

mod dataset;
mod parse;

pub use dataset::{
    synth_dataset, synth_label, synth_templates, ClassId, DatasetError, LabeledDataset, Role, SynthConfig, MAX_CLASSES,
};
pub use parse::{bin_peaks, parse_spectrum, Peak};

use alloc::vec;
use alloc::vec::Vec;

use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::seed;

/// First m/z bin.
pub const MZ_START: u32 = 50;
/// Last m/z bin (inclusive).
pub const MZ_END: u32 = 350;
/// Number of unit-width bins between [`MZ_START`] and [`MZ_END`].
pub const N_BINS: usize = (MZ_END - MZ_START + 1) as usize;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpectrumError {
    #[error("line {line}: expected `m/z,intensity` or `m/z intensity`")]
    Malformed { line: usize },
    #[error("line {line}: negative intensity")]
    NegativeIntensity { line: usize },
    #[error("no peaks in input")]
    EmptyInput,
    #[error("every peak lies outside m/z {MZ_START}-{MZ_END}")]
    AllPeaksOutOfRange,
    #[error("expected {expected} bins, got {found}")]
    WrongLength { expected: usize, found: usize },
    #[error("bin {bin}: intensity must be finite and non-negative")]
    InvalidIntensity { bin: usize },
    #[error("spectrum is all zero")]
    ZeroSpectrum,
    #[error("mask {lo}-{hi} is not a sub-range of {MZ_START}-{MZ_END}")]
    MaskOutOfRange { lo: u32, hi: u32 },
    #[error("noise level {0} outside [0, 1]")]
    InvalidNoiseLevel(f64),
}

/// A 301-bin intensity vector. Construction validates length and sign, so
/// every value of this type satisfies the bin invariants.
#[derive(Debug, Clone, PartialEq)]
pub struct BinnedSpectrum {
    intensities: Vec<f64>,
}

impl BinnedSpectrum {
    pub fn new(intensities: Vec<f64>) -> Result<Self, SpectrumError> {
        if intensities.len() != N_BINS {
            return Err(SpectrumError::WrongLength { expected: N_BINS, found: intensities.len() });
        }
        if let Some(bin) = intensities.iter().position(|v| !v.is_finite() || *v < 0.0) {
            return Err(SpectrumError::InvalidIntensity { bin });
        }
        Ok(Self { intensities })
    }

    pub fn zeros() -> Self {
        Self { intensities: vec![0.0; N_BINS] }
    }

    /// Bin index of an integer m/z, if it is in range.
    pub fn bin_of(mz: u32) -> Option<usize> {
        (MZ_START..=MZ_END).contains(&mz).then(|| (mz - MZ_START) as usize)
    }

    pub fn intensities(&self) -> &[f64] {
        &self.intensities
    }

    pub fn into_intensities(self) -> Vec<f64> {
        self.intensities
    }

    pub fn max_intensity(&self) -> f64 {
        self.intensities.iter().copied().fold(0.0, f64::max)
    }

    /// True when the base peak is exactly 1.
    pub fn is_normalized(&self) -> bool {
        self.max_intensity() == 1.0
    }

    /// Base-peak normalization: every bin divided by the maximum.
    pub fn normalize(&self) -> Result<Self, SpectrumError> {
        let max = self.max_intensity();
        if max <= 0.0 {
            return Err(SpectrumError::ZeroSpectrum);
        }
        Ok(Self { intensities: self.intensities.iter().map(|v| v / max).collect() })
    }

    /// Adds independent `N(0, level²)` noise to every bin and clips at zero.
    ///
    /// The noise is relative to a unit base peak, so callers are expected to
    /// pass normalized spectra.
    pub fn with_noise(&self, noise: NoiseSpec) -> Self {
        if noise.level == 0.0 {
            return self.clone();
        }
        let delta = noise.perturbation(N_BINS);
        Self { intensities: self.intensities.iter().zip(&delta).map(|(v, d)| (v + d).max(0.0)).collect() }
    }

    /// Zero-fills the bins covered by `mask`.
    pub fn masked(&self, mask: MaskSpec) -> Self {
        let mut intensities = self.intensities.clone();
        intensities[mask.bins()].iter_mut().for_each(|v| *v = 0.0);
        Self { intensities }
    }
}

impl AsRef<[f64]> for BinnedSpectrum {
    fn as_ref(&self) -> &[f64] {
        &self.intensities
    }
}

/// Gaussian noise amplitude (fraction of the base peak) and its seed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    level: f64,
    seed: u64,
}

impl NoiseSpec {
    pub fn new(level: f64, seed: u64) -> Result<Self, SpectrumError> {
        if !(0.0..=1.0).contains(&level) {
            return Err(SpectrumError::InvalidNoiseLevel(level));
        }
        Ok(Self { level, seed })
    }

    pub fn level(&self) -> f64 {
        self.level
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// The raw, unclipped per-bin perturbation `level · z`, `z ~ N(0, 1)`.
    pub fn perturbation(&self, len: usize) -> Vec<f64> {
        let mut rng = seed::rng(self.seed);
        perturbation_from(&mut rng, self.level, len)
    }
}

pub(crate) fn perturbation_from(rng: &mut seed::Rng, level: f64, len: usize) -> Vec<f64> {
    (0..len)
        .map(|_| {
            let z: f64 = StandardNormal.sample(rng);
            level * z
        })
        .collect()
}

/// Adds clipped Gaussian noise to an arbitrary non-negative vector.
pub(crate) fn noisy_copy(values: &[f64], level: f64, rng: &mut seed::Rng) -> Vec<f64> {
    if level == 0.0 {
        return values.to_vec();
    }
    let delta = perturbation_from(rng, level, values.len());
    values.iter().zip(&delta).map(|(v, d)| (v + d).max(0.0)).collect()
}

/// Inclusive m/z window to delete from a spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct MaskSpec {
    mz_lo: u32,
    mz_hi: u32,
}

impl MaskSpec {
    /// The low-mass window 50-90 m/z deleted in the partial-spectrum experiment.
    pub const LOW_MASS: MaskSpec = MaskSpec { mz_lo: 50, mz_hi: 90 };

    pub fn new(mz_lo: u32, mz_hi: u32) -> Result<Self, SpectrumError> {
        if MZ_START <= mz_lo && mz_lo <= mz_hi && mz_hi <= MZ_END {
            Ok(Self { mz_lo, mz_hi })
        } else {
            Err(SpectrumError::MaskOutOfRange { lo: mz_lo, hi: mz_hi })
        }
    }

    pub fn mz_lo(&self) -> u32 {
        self.mz_lo
    }

    pub fn mz_hi(&self) -> u32 {
        self.mz_hi
    }

    /// Bin index range covered by the mask.
    pub fn bins(&self) -> core::ops::Range<usize> {
        (self.mz_lo - MZ_START) as usize..(self.mz_hi - MZ_START + 1) as usize
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spike(bin: usize, v: f64) -> BinnedSpectrum {
        let mut x = vec![0.0; N_BINS];
        x[bin] = v;
        BinnedSpectrum::new(x).unwrap()
    }

    #[test]
    fn rejects_bad_vectors() {
        assert_eq!(BinnedSpectrum::new(vec![0.0; 300]), Err(SpectrumError::WrongLength { expected: 301, found: 300 }));
        let mut x = vec![0.0; N_BINS];
        x[7] = -0.1;
        assert_eq!(BinnedSpectrum::new(x), Err(SpectrumError::InvalidIntensity { bin: 7 }));
        let mut x = vec![0.0; N_BINS];
        x[3] = f64::NAN;
        assert_eq!(BinnedSpectrum::new(x), Err(SpectrumError::InvalidIntensity { bin: 3 }));
    }

    #[test]
    fn normalize_single_peak() {
        let n = spike(120, 4.0).normalize().unwrap();
        assert_eq!(n.intensities()[120], 1.0);
        assert_eq!(n.intensities().iter().filter(|v| **v != 0.0).count(), 1);
    }

    #[test]
    fn normalize_halves() {
        let mut x = vec![0.0; N_BINS];
        x[0] = 2.0;
        x[1] = 1.0;
        let n = BinnedSpectrum::new(x).unwrap().normalize().unwrap();
        assert_eq!(&n.intensities()[..3], &[1.0, 0.5, 0.0]);
    }

    #[test]
    fn normalize_is_identity_on_normalized() {
        let mut x = vec![0.0; N_BINS];
        x[10] = 1.0;
        x[11] = 0.37;
        let s = BinnedSpectrum::new(x).unwrap();
        assert_eq!(s.normalize().unwrap(), s);
    }

    #[test]
    fn normalize_rejects_zero() {
        assert_eq!(BinnedSpectrum::zeros().normalize(), Err(SpectrumError::ZeroSpectrum));
    }

    #[test]
    fn zero_noise_is_identity() {
        let s = spike(5, 1.0);
        assert_eq!(s.with_noise(NoiseSpec::new(0.0, 99).unwrap()), s);
    }

    #[test]
    fn noise_is_deterministic() {
        let s = spike(5, 1.0);
        let n = NoiseSpec::new(0.05, 1234).unwrap();
        let a = s.with_noise(n);
        let b = s.with_noise(n);
        assert!(a.intensities().iter().zip(b.intensities()).all(|(x, y)| x.to_bits() == y.to_bits()));
        assert_ne!(a, s.with_noise(NoiseSpec::new(0.05, 1235).unwrap()));
    }

    #[test]
    fn noise_level_validated() {
        assert!(NoiseSpec::new(-0.01, 0).is_err());
        assert!(NoiseSpec::new(1.01, 0).is_err());
        assert!(NoiseSpec::new(1.0, 0).is_ok());
    }

    #[test]
    fn half_normal_mean_of_perturbation() {
        // E|level·z| = level·sqrt(2/π)
        let level = 0.05;
        let seeds = 10_000u64;
        let mut sum = 0.0;
        for s in 0..seeds {
            sum += NoiseSpec::new(level, s).unwrap().perturbation(1)[0].abs();
        }
        let mean = sum / seeds as f64;
        let expected = level * libm::sqrt(2.0 / core::f64::consts::PI);
        assert!((mean - expected).abs() / expected < 0.02, "{mean} vs {expected}");
    }

    #[test]
    fn low_mass_mask_zeroes_41_bins() {
        let s = BinnedSpectrum::new(vec![0.5; N_BINS]).unwrap();
        let m = s.masked(MaskSpec::LOW_MASS);
        assert!(m.intensities()[..41].iter().all(|v| *v == 0.0));
        assert!(m.intensities()[41..].iter().all(|v| *v == 0.5));
        assert_eq!(MaskSpec::LOW_MASS.bins().len(), 41);
        assert_eq!(MaskSpec::new(50, 90).unwrap(), MaskSpec::LOW_MASS);
    }

    #[test]
    fn single_bin_mask() {
        let s = BinnedSpectrum::new(vec![0.5; N_BINS]).unwrap();
        let m = s.masked(MaskSpec::new(350, 350).unwrap());
        assert_eq!(m.intensities()[300], 0.0);
        assert_eq!(m.intensities().iter().filter(|v| **v == 0.0).count(), 1);
    }

    #[test]
    fn mask_on_zero_bin_is_identity() {
        let s = spike(100, 1.0);
        assert_eq!(s.masked(MaskSpec::new(50, 50).unwrap()), s);
    }

    #[test]
    fn mask_range_validated() {
        assert!(MaskSpec::new(49, 90).is_err());
        assert!(MaskSpec::new(60, 351).is_err());
        assert!(MaskSpec::new(91, 90).is_err());
    }

    #[test]
    fn bin_of_bounds() {
        assert_eq!(BinnedSpectrum::bin_of(50), Some(0));
        assert_eq!(BinnedSpectrum::bin_of(350), Some(300));
        assert_eq!(BinnedSpectrum::bin_of(49), None);
        assert_eq!(BinnedSpectrum::bin_of(351), None);
    }
}
