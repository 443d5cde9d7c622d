#![allow(dead_code)]

use rand::Rng;
use specid::persist::{AnnMetadata, ModelBundle, ParzenMetadata};
use specid_core::ann::{self, TrainConfig};
use specid_core::bench::{fit_parzen, ParzenSettings};
use specid_core::spectra::{synth_dataset, LabeledDataset, SynthConfig};
use specid_core::BinnedSpectrum;

/// The default synthetic corpus.
pub fn corpus() -> (LabeledDataset, LabeledDataset) {
    synth_dataset(&SynthConfig::default()).unwrap()
}

/// Both classifiers trained on `train` with run seed `seed`.
pub fn bundle(train: &LabeledDataset, seed: u64) -> ModelBundle {
    let cfg = TrainConfig { seed, ..TrainConfig::default() };
    let (net, log) = ann::train(train, &cfg).unwrap();
    let ann_meta = AnnMetadata {
        seed,
        epochs: log.epochs.len(),
        reached_target: log.reached_target,
        best_noisy_accuracy: log.best_accuracy,
        noise_level: cfg.noise_level,
        epsilon: log.grid.epsilon(),
        grid: AnnMetadata::grid_state(&log.grid),
    };
    let settings = ParzenSettings::default();
    let parzen = fit_parzen(train, &settings, seed).unwrap();
    let parzen_meta = ParzenMetadata { seed, replicas: settings.replicas, noise_level: settings.noise_level };
    ModelBundle::new(train.labels(), Some((net, ann_meta)), Some((parzen, parzen_meta))).unwrap()
}

/// Random base-peak normalized spectra: a handful of peaks, or a noisy copy
/// of a training spectrum.
pub fn random_spectra(train: &LabeledDataset, n: usize, seed: u64) -> Vec<BinnedSpectrum> {
    let mut rng = specid_core::seed::rng(seed);
    (0..n)
        .map(|i| {
            if i % 2 == 0 {
                let (s, _) = &train.items()[rng.random_range(0..train.len())];
                let v: Vec<f64> = s.intensities().iter().map(|x| (x + rng.random_range(-0.1..0.1)).max(0.0)).collect();
                BinnedSpectrum::new(v).unwrap().normalize().unwrap()
            } else {
                let mut v = vec![0.0; 301];
                for _ in 0..rng.random_range(1..20) {
                    v[rng.random_range(0..301)] = rng.random_range(0.01..1.0);
                }
                BinnedSpectrum::new(v).unwrap().normalize().unwrap()
            }
        })
        .collect()
}
