//! Recognition engines for binned electron-impact mass spectra.
//!
//! Two classifiers share one input representation (301 unit m/z bins,
//! base-peak normalized):
//!
//! - [`parzen`]: Bayes rule over Parzen-window (Gaussian kernel) class
//!   densities, evaluated in the log domain.
//! - [`ann`]: a 301-20-45 sigmoid network trained by online backpropagation
//!   with per-epoch noise augmentation and an ε-greedy controller choosing
//!   the learning rate and momentum.
//!
//! [`bench`] runs both through the clean / noisy / partial-spectrum protocol.
//!
//! The crate is `no_std` and needs only `alloc`.

#![no_std]

extern crate alloc;

pub mod ann;
pub mod bench;
pub mod parzen;
pub mod seed;
pub mod spectra;

pub use ann::{ClassificationResult, Network};
pub use bench::{evaluate, run_protocol, ExperimentReport, ProtocolConfig};
pub use parzen::{Bandwidth, ParzenModel};
pub use spectra::{BinnedSpectrum, ClassId, LabeledDataset, MaskSpec, NoiseSpec};
