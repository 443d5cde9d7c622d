//! Spectrum files, model bundles, experiment reports, the `specid` CLI and
//! the HTTP classification service, built on `specid-core`.

pub mod cli;
pub mod config;
pub mod engine;
pub mod io;
pub mod persist;
pub mod record;
pub mod report;
pub mod service;
