use alloc::vec::Vec;

use rand::seq::SliceRandom;

use super::{one_hot, AnnError, HyperCell, HyperGrid, Network, Params};
use crate::seed;
use crate::spectra::{noisy_copy, LabeledDataset};

const TAG_SELECT: u64 = 0x5E1E_C700;
const TAG_EPOCH: u64 = 0xE90C_0000;

/// Training protocol settings.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub max_epochs: usize,
    pub target_train_accuracy: f64,
    /// Gaussian noise (fraction of base peak) redrawn for every spectrum each epoch.
    pub noise_level: f64,
    pub seed: u64,
    pub grid: HyperGrid,
    /// Consecutive epochs the target accuracy must hold before stopping.
    pub target_patience: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            max_epochs: 2000,
            target_train_accuracy: 1.0,
            noise_level: 0.05,
            seed: 0,
            grid: HyperGrid::default(),
            target_patience: 200,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), AnnError> {
        if self.max_epochs == 0 {
            return Err(AnnError::InvalidConfig("max_epochs must be >= 1"));
        }
        if !(self.target_train_accuracy > 0.0 && self.target_train_accuracy <= 1.0) {
            return Err(AnnError::InvalidConfig("target_train_accuracy must be in (0, 1]"));
        }
        if self.target_patience == 0 {
            return Err(AnnError::InvalidConfig("target_patience must be >= 1"));
        }
        if !(0.0..=1.0).contains(&self.noise_level) {
            return Err(AnnError::InvalidConfig("noise_level must be in [0, 1]"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochStats {
    /// Mean pre-update loss over the epoch's steps.
    pub mean_loss: f64,
    /// Accuracy of the post-epoch network on that epoch's noisy inputs.
    pub accuracy: f64,
}

/// One line of the training log.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub cell: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    /// `None` when the epoch diverged and was rolled back.
    pub loss: Option<f64>,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingLog {
    pub epochs: Vec<EpochRecord>,
    pub grid: HyperGrid,
    pub best_accuracy: f64,
    pub reached_target: bool,
}

/// One pass over `data` in a seeded shuffled order, with a fresh noise
/// realization per spectrum and one backprop step per example. Momentum
/// starts at zero each epoch.
pub fn train_epoch(
    net: &Network,
    data: &LabeledDataset,
    cell: HyperCell,
    noise_level: f64,
    epoch_seed: u64,
) -> Result<(Network, EpochStats), AnnError> {
    if data.is_empty() {
        return Err(AnnError::EmptyTrainingSet);
    }
    let n_out = net.dims().output;
    let inputs: Vec<Vec<f64>> = data
        .items()
        .iter()
        .enumerate()
        .map(|(i, (s, _))| noisy_copy(s.intensities(), noise_level, &mut seed::rng_stream(epoch_seed, 1 + i as u64)))
        .collect();
    let targets = data.items().iter().map(|(_, c)| one_hot(*c, n_out)).collect::<Result<Vec<_>, _>>()?;

    let mut order: Vec<usize> = (0..inputs.len()).collect();
    order.shuffle(&mut seed::rng_stream(epoch_seed, 0));

    let mut next = net.clone();
    let mut velocity = Params::zeros(net.dims());
    let mut total_loss = 0.0;
    for &i in &order {
        total_loss += next.backprop_step(&inputs[i], &targets[i], cell.learning_rate, cell.momentum, &mut velocity)?;
    }
    let correct = inputs
        .iter()
        .zip(data.items())
        .filter(|(x, (_, c))| next.classify(x).map(|r| r.label == *c).unwrap_or(false))
        .count();
    let stats =
        EpochStats { mean_loss: total_loss / inputs.len() as f64, accuracy: correct as f64 / inputs.len() as f64 };
    Ok((next, stats))
}

/// Fraction of `data` the network labels correctly (no noise).
pub(crate) fn accuracy(net: &Network, data: &LabeledDataset) -> Result<f64, AnnError> {
    let mut correct = 0usize;
    for (s, c) in data.items() {
        if net.classify(s.intensities())?.label == *c {
            correct += 1;
        }
    }
    Ok(correct as f64 / data.len() as f64)
}

/// Trains a freshly initialized 301-20-45 network.
///
/// Every epoch the grid controller picks a (learning rate, momentum) cell,
/// the epoch runs with it, and the cell is rewarded with the change in
/// training accuracy. An epoch with a non-finite gradient is rolled back and
/// its cell rewarded -1. Training stops once the target accuracy has held
/// for `target_patience` consecutive epochs, or after `max_epochs`. The
/// returned network is the most recent one with the best accuracy seen.
pub fn train(data: &LabeledDataset, cfg: &TrainConfig) -> Result<(Network, TrainingLog), AnnError> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(AnnError::EmptyTrainingSet);
    }
    let mut grid = cfg.grid.clone();
    let mut net = Network::init(cfg.seed);
    let mut current = accuracy(&net, data)?;
    let mut best = (net.clone(), current);
    let mut diverged = alloc::vec![false; grid.len()];
    let mut epochs = Vec::new();
    let select_base = seed::derive(cfg.seed, TAG_SELECT);
    let epoch_base = seed::derive(cfg.seed, TAG_EPOCH);

    let mut streak = 0usize;
    for epoch in 0..cfg.max_epochs {
        if streak >= cfg.target_patience {
            break;
        }
        let cell = grid.select(seed::derive(select_base, epoch as u64));
        let hyper = grid.cells()[cell];
        match train_epoch(&net, data, hyper, cfg.noise_level, seed::derive(epoch_base, epoch as u64)) {
            Ok((next, stats)) => {
                grid.update(cell, stats.accuracy - current);
                net = next;
                current = stats.accuracy;
                streak = if current >= cfg.target_train_accuracy { streak + 1 } else { 0 };
                if current >= best.1 {
                    best = (net.clone(), current);
                }
                epochs.push(EpochRecord {
                    epoch,
                    cell,
                    learning_rate: hyper.learning_rate,
                    momentum: hyper.momentum,
                    loss: Some(stats.mean_loss),
                    accuracy: current,
                });
            }
            Err(AnnError::NonFiniteGradient) => {
                grid.update(cell, -1.0);
                diverged[cell] = true;
                epochs.push(EpochRecord {
                    epoch,
                    cell,
                    learning_rate: hyper.learning_rate,
                    momentum: hyper.momentum,
                    loss: None,
                    accuracy: current,
                });
                streak = 0;
                if diverged.iter().all(|d| *d) {
                    return Err(AnnError::Diverged);
                }
            }
            Err(e) => return Err(e),
        }
    }
    let (net, best_accuracy) = best;
    let reached_target = best_accuracy >= cfg.target_train_accuracy;
    Ok((net, TrainingLog { epochs, grid, best_accuracy, reached_target }))
}
