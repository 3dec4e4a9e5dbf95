//! Bistatic OFDM micro-Doppler simulation of rotating drone propellers.
//!
//! The crate is organised as a pipeline:
//!
//! ```text
//! geometry ──► BistaticFactors ─┐
//! waveform ──► ModulationGrid ──┼─► scatter (per rotor) ──► scene (frames + noise)
//!                               │                               │
//!                               └───────────────────────────────▼
//!                                   dsp: slow time, Doppler spectra, range-Doppler maps
//! ```
//!
//! [`config`], [`format`] and [`batch`] turn the pipeline into a
//! deterministic dataset generator driven by a TOML description.
//!
//! Data-parallel loops (frames, map rows, sweep points) go through
//! [`exec::Execution`]; with the default `parallel` feature they run on
//! rayon, otherwise everything runs sequentially with identical output.

// `!(x > 0.0)` style checks are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod batch;
pub mod config;
pub mod dsp;
pub mod exec;
pub mod format;
pub mod geometry;
pub mod scatter;
pub mod scene;
pub mod validate;
pub mod waveform;

pub use num_complex::Complex64;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

pub use batch::{run_batch, BatchError, BatchReport, SignatureRecord};
pub use config::{load_config, ConfigError, RunConfig};
pub use dsp::{DopplerSpectrum, RangeDopplerMap, SlowTimeSignal, Window};
pub use exec::Execution;
pub use geometry::{BistaticFactors, BistaticGeometry};
pub use scatter::{EchoFrame, Propeller, RotorView, TimeMode};
pub use scene::{Scene, StaticScatterer};
pub use waveform::{CarrierReference, ModulationGrid, OfdmConfig};
