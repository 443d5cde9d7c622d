//! Two-stage sigmoid feed-forward network trained by online backpropagation.
//!
//! The production shape is 301 inputs, 20 hidden units and 45 outputs, but
//! the network is dimension-generic so small instances can be checked
//! against finite differences.

mod grid;
mod train;

pub use grid::{HyperCell, HyperGrid};
pub use train::{train, train_epoch, EpochRecord, EpochStats, TrainConfig, TrainingLog};

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng as _;
use thiserror::Error;

use crate::seed;
use crate::spectra::{ClassId, MAX_CLASSES, N_BINS};

/// Hidden layer width of the production network.
pub const HIDDEN_UNITS: usize = 20;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnnError {
    #[error("input has {found} values, network expects {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("target class {0} outside the output layer")]
    LabelOutOfRange(usize),
    #[error("gradient or updated weights are not finite")]
    NonFiniteGradient,
    #[error("every hyperparameter cell diverged")]
    Diverged,
    #[error("invalid training configuration: {0}")]
    InvalidConfig(&'static str),
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("inconsistent network parameters: {0}")]
    Inconsistent(&'static str),
}

/// Layer widths `(inputs, hidden, outputs)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dims {
    pub input: usize,
    pub hidden: usize,
    pub output: usize,
}

impl Dims {
    pub const SPECTRAL: Dims = Dims { input: N_BINS, hidden: HIDDEN_UNITS, output: MAX_CLASSES };

    pub const fn new(input: usize, hidden: usize, output: usize) -> Self {
        Self { input, hidden, output }
    }

    fn param_count(&self) -> usize {
        self.hidden * self.input + self.hidden + self.output * self.hidden + self.output
    }
}

/// Logistic function. The argument is clamped to ±36 so the result stays
/// strictly inside (0, 1) in double precision.
#[inline]
pub fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + libm::exp(-z.clamp(-36.0, 36.0)))
}

/// Weights and biases. Matrices are row-major, one row per receiving unit.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    dims: Dims,
    w1: Vec<f64>,
    b1: Vec<f64>,
    w2: Vec<f64>,
    b2: Vec<f64>,
}

/// Activations of one forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct Activations {
    pub hidden: Vec<f64>,
    pub output: Vec<f64>,
}

/// Parameter-shaped buffer used for gradients and momentum.
#[derive(Debug, Clone, PartialEq)]
pub struct Params {
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
}

impl Params {
    pub fn zeros(d: Dims) -> Self {
        Self {
            w1: vec![0.0; d.hidden * d.input],
            b1: vec![0.0; d.hidden],
            w2: vec![0.0; d.output * d.hidden],
            b2: vec![0.0; d.output],
        }
    }

    fn iter(&self) -> impl Iterator<Item = &f64> {
        self.w1.iter().chain(&self.b1).chain(&self.w2).chain(&self.b2)
    }

    fn iter_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.w1.iter_mut().chain(&mut self.b1).chain(&mut self.w2).chain(&mut self.b2)
    }

    /// Flat view in the order `w1, b1, w2, b2`.
    pub fn flat(&self) -> Vec<f64> {
        self.iter().copied().collect()
    }
}

/// Momentum state carried between backprop steps.
pub type Velocity = Params;

/// Network output for one query.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassificationResult {
    pub label: ClassId,
    pub scores: Vec<f64>,
    /// Top score minus runner-up score.
    pub margin: f64,
}

impl Network {
    /// All weights and biases zero.
    pub fn zeros(dims: Dims) -> Self {
        let p = Params::zeros(dims);
        Self { dims, w1: p.w1, b1: p.b1, w2: p.w2, b2: p.b2 }
    }

    /// The 301-20-45 network with weights uniform in ±1/sqrt(fan_in) and zero biases.
    pub fn init(seed: u64) -> Self {
        Self::init_with_dims(Dims::SPECTRAL, seed)
    }

    pub fn init_with_dims(dims: Dims, seed: u64) -> Self {
        let mut rng = seed::rng(seed);
        let mut net = Self::zeros(dims);
        let r1 = 1.0 / libm::sqrt(dims.input as f64);
        net.w1.iter_mut().for_each(|w| *w = rng.random_range(-r1..=r1));
        let r2 = 1.0 / libm::sqrt(dims.hidden as f64);
        net.w2.iter_mut().for_each(|w| *w = rng.random_range(-r2..=r2));
        net
    }

    /// Builds a network from stored parameters, checking shapes and finiteness.
    pub fn from_parts(dims: Dims, w1: Vec<f64>, b1: Vec<f64>, w2: Vec<f64>, b2: Vec<f64>) -> Result<Self, AnnError> {
        if w1.len() != dims.hidden * dims.input
            || b1.len() != dims.hidden
            || w2.len() != dims.output * dims.hidden
            || b2.len() != dims.output
        {
            return Err(AnnError::Inconsistent("parameter shapes do not match dims"));
        }
        let net = Self { dims, w1, b1, w2, b2 };
        if !net.params().all(|v| v.is_finite()) {
            return Err(AnnError::Inconsistent("non-finite parameter"));
        }
        Ok(net)
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn w1(&self) -> &[f64] {
        &self.w1
    }

    pub fn b1(&self) -> &[f64] {
        &self.b1
    }

    pub fn w2(&self) -> &[f64] {
        &self.w2
    }

    pub fn b2(&self) -> &[f64] {
        &self.b2
    }

    fn params(&self) -> impl Iterator<Item = &f64> {
        self.w1.iter().chain(&self.b1).chain(&self.w2).chain(&self.b2)
    }

    fn params_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.w1.iter_mut().chain(&mut self.b1).chain(&mut self.w2).chain(&mut self.b2)
    }

    /// Flat parameter vector in the order `w1, b1, w2, b2`.
    pub fn flat_params(&self) -> Vec<f64> {
        self.params().copied().collect()
    }

    /// Overwrites the parameter at flat index `i` (same order as [`Network::flat_params`]).
    pub fn set_flat_param(&mut self, i: usize, v: f64) {
        assert!(i < self.dims.param_count(), "parameter index out of range");
        *self.params_mut().nth(i).unwrap() = v;
    }

    /// `h = σ(W1·x + b1)`, `y = σ(W2·h + b2)`.
    pub fn forward(&self, x: &[f64]) -> Result<Activations, AnnError> {
        let d = self.dims;
        if x.len() != d.input {
            return Err(AnnError::DimensionMismatch { expected: d.input, found: x.len() });
        }
        let hidden: Vec<f64> = (0..d.hidden)
            .map(|j| {
                let row = &self.w1[j * d.input..(j + 1) * d.input];
                sigmoid(dot(row, x) + self.b1[j])
            })
            .collect();
        let output = (0..d.output)
            .map(|k| {
                let row = &self.w2[k * d.hidden..(k + 1) * d.hidden];
                sigmoid(dot(row, &hidden) + self.b2[k])
            })
            .collect();
        Ok(Activations { hidden, output })
    }

    /// Sum-of-squares loss and its gradient for one example.
    pub fn gradient(&self, x: &[f64], target: &[f64]) -> Result<(Params, f64), AnnError> {
        let d = self.dims;
        if target.len() != d.output {
            return Err(AnnError::DimensionMismatch { expected: d.output, found: target.len() });
        }
        let act = self.forward(x)?;
        let loss = loss(&act.output, target);
        let mut g = Params::zeros(d);

        // dE/dz2 = (y - t)·y(1 - y)
        let delta_out: Vec<f64> = act.output.iter().zip(target).map(|(y, t)| (y - t) * y * (1.0 - y)).collect();
        for ((row, gb), &dk) in g.w2.chunks_exact_mut(d.hidden).zip(&mut g.b2).zip(&delta_out) {
            for (gw, h) in row.iter_mut().zip(&act.hidden) {
                *gw = dk * h;
            }
            *gb = dk;
        }
        for j in 0..d.hidden {
            let back: f64 = (0..d.output).map(|k| self.w2[k * d.hidden + j] * delta_out[k]).sum();
            let h = act.hidden[j];
            let delta = back * h * (1.0 - h);
            let row = &mut g.w1[j * d.input..(j + 1) * d.input];
            for (gw, xi) in row.iter_mut().zip(x) {
                *gw = delta * xi;
            }
            g.b1[j] = delta;
        }
        Ok((g, loss))
    }

    /// One momentum step: `v ← μ·v − η·∇E`, `w ← w + v`. Returns the loss
    /// before the update. On a non-finite gradient or update, neither the
    /// network nor the velocity is modified.
    pub fn backprop_step(
        &mut self,
        x: &[f64],
        target: &[f64],
        learning_rate: f64,
        momentum: f64,
        velocity: &mut Velocity,
    ) -> Result<f64, AnnError> {
        let (grad, loss) = self.gradient(x, target)?;
        if !loss.is_finite() || !grad.iter().all(|g| g.is_finite()) {
            return Err(AnnError::NonFiniteGradient);
        }
        let new_v: Vec<f64> = velocity.iter().zip(grad.iter()).map(|(v, g)| momentum * v - learning_rate * g).collect();
        if !new_v.iter().zip(self.params()).all(|(v, w)| (w + v).is_finite()) {
            return Err(AnnError::NonFiniteGradient);
        }
        for ((w, v), nv) in self.params_mut().zip(velocity.iter_mut()).zip(&new_v) {
            *v = *nv;
            *w += *nv;
        }
        Ok(loss)
    }

    /// Arg-max of the output activations; ties go to the lowest index.
    pub fn classify(&self, x: &[f64]) -> Result<ClassificationResult, AnnError> {
        let scores = self.forward(x)?.output;
        let (top, runner_up) = top_two(&scores);
        let margin = runner_up.map_or(0.0, |r| scores[top] - scores[r]);
        Ok(ClassificationResult { label: ClassId(top), scores, margin })
    }
}

/// Indices of the largest and second-largest values; ties resolve to the
/// lower index first.
fn top_two(v: &[f64]) -> (usize, Option<usize>) {
    let mut best = 0;
    for (i, s) in v.iter().enumerate() {
        if *s > v[best] {
            best = i;
        }
    }
    let mut second: Option<usize> = None;
    for (i, s) in v.iter().enumerate() {
        if i != best && second.is_none_or(|j| *s > v[j]) {
            second = Some(i);
        }
    }
    (best, second)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `½ Σ (y − t)²`.
pub fn loss(output: &[f64], target: &[f64]) -> f64 {
    0.5 * output.iter().zip(target).map(|(y, t)| (y - t) * (y - t)).sum::<f64>()
}

/// One-hot 0/1 target of width `n`.
pub fn one_hot(class: ClassId, n: usize) -> Result<Vec<f64>, AnnError> {
    if class.0 >= n {
        return Err(AnnError::LabelOutOfRange(class.0));
    }
    let mut t = vec![0.0; n];
    t[class.0] = 1.0;
    Ok(t)
}
