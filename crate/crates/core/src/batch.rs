//! Batch dataset generation.
//!
//! Every sweep point of a [`RunConfig`] is simulated, analyzed and written
//! to `output_dir` as `run_NNNN_<product>.<ext>`. A `manifest.json` lists
//! each run's labels, resolved config, payload hashes and metrics. Runs that
//! fail are recorded with their error and the batch carries on.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::config::{ConfigError, Product, RawConfig, RunConfig};
use crate::dsp::{self, DopplerSpectrum, DspError, RangeDopplerMap};
use crate::exec::Execution;
use crate::format::{self, Matrix};
use crate::scatter::EchoFrame;
use crate::scene::{simulate_symbols, SceneError};
use crate::waveform::{newman_grid, WaveformError};
use crate::SPEED_OF_LIGHT;

pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Error)]
pub enum BatchError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error(transparent)]
    Waveform(#[from] WaveformError),
    #[error(transparent)]
    Dsp(#[from] DspError),
    #[error(transparent)]
    Format(#[from] format::FormatError),
    #[error("manifest {path}: {source}")]
    Manifest { path: PathBuf, source: serde_json::Error },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> BatchError + '_ {
    move |source| BatchError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Parameters that identify a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Labels {
    /// Blade count of each propeller.
    pub blades: Vec<usize>,
    /// Rotation rate of each propeller, rpm.
    pub rotation_rate_rpm: Vec<f64>,
    pub bistatic_angle_deg: f64,
    /// Absent for noise-free runs.
    pub snr_db: Option<f64>,
    pub seed: u64,
}

impl Labels {
    pub fn of(cfg: &RunConfig) -> Self {
        let snr = cfg.scene.snr_db();
        Self {
            blades: cfg.scene.propellers.iter().map(|p| p.n_blades).collect(),
            rotation_rate_rpm: cfg
                .scene
                .propellers
                .iter()
                .map(|p| p.rotation_frequency() * 60.0)
                .collect(),
            bistatic_angle_deg: cfg.geometry.bistatic_angle().to_degrees(),
            snr_db: snr.is_finite().then_some(snr),
            seed: cfg.seed,
        }
    }
}

/// Scalar features of a run's Doppler spectrum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub range_bin: usize,
    pub bin_width_hz: f64,
    /// Median spacing of the spectral lines; absent when fewer than three
    /// lines stand out.
    pub impulse_spacing_hz: Option<f64>,
    pub doppler_spread_hz: f64,
    pub support_low_hz: f64,
    pub support_high_hz: f64,
    /// Largest blade-tip Doppler shift of each propeller at the carrier.
    pub predicted_max_doppler_hz: Vec<f64>,
}

impl Metrics {
    pub fn of(cfg: &RunConfig, spec: &DopplerSpectrum, range_bin: usize) -> Self {
        let (lo, hi) = dsp::support_edges(spec, cfg.dsp.spread);
        let wavelength = SPEED_OF_LIGHT / cfg.waveform.f0;
        let beta = cfg.geometry.bistatic_angle();
        Self {
            range_bin,
            bin_width_hz: spec.bin_width,
            impulse_spacing_hz: dsp::impulse_spacing(spec, cfg.dsp.peak_threshold_db).ok(),
            doppler_spread_hz: hi - lo + spec.bin_width,
            support_low_hz: lo,
            support_high_hz: hi,
            predicted_max_doppler_hz: cfg
                .scene
                .propellers
                .iter()
                .map(|p| dsp::predict_bistatic_doppler(p.tip_speed(), beta, 0.0, wavelength).unwrap_or(f64::NAN))
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PayloadRecord {
    pub product: Product,
    /// File name relative to the manifest.
    pub file: String,
    pub bytes: u64,
    pub sha256: String,
}

/// One run of a batch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignatureRecord {
    pub index: usize,
    pub labels: Labels,
    /// Resolved single-run configuration; loading it reproduces the payloads.
    pub config: RawConfig,
    pub payloads: Vec<PayloadRecord>,
    pub metrics: Option<Metrics>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u16,
    pub runs: usize,
    pub failed: usize,
    pub records: Vec<SignatureRecord>,
}

#[derive(Debug, Clone)]
pub struct BatchReport {
    pub output_dir: PathBuf,
    pub manifest: Manifest,
}

impl BatchReport {
    pub fn all_succeeded(&self) -> bool {
        self.manifest.failed == 0
    }
}

/// Products of one simulated run.
#[derive(Debug, Clone)]
pub struct RunOutput {
    /// Frames of the analyzed symbols (every `subsample`-th).
    pub frames: Vec<EchoFrame>,
    pub spectrum: DopplerSpectrum,
    pub map: Option<RangeDopplerMap>,
    pub range_bin: usize,
    pub metrics: Metrics,
}

impl RunOutput {
    /// The payload of `product`.
    pub fn matrix(&self, product: Product) -> Result<Matrix, BatchError> {
        Ok(match product {
            Product::Spectrum => Matrix::from_spectrum(&self.spectrum),
            Product::Map => Matrix::from_map(self.map.as_ref().expect("map computed when requested")),
            Product::Frames => Matrix::from_frames(&self.frames)?,
        })
    }
}

/// Simulates and analyzes a single-run config (its sweep is ignored).
pub fn simulate_run(cfg: &RunConfig, exec: Execution) -> Result<RunOutput, BatchError> {
    let w = &cfg.waveform;
    let grid = newman_grid(w)?;
    let symbols: Vec<usize> = (0..w.n_symbols).step_by(cfg.dsp.subsample).collect();
    let frames = simulate_symbols(&cfg.scene, &cfg.geometry, w, &grid, &symbols, cfg.dsp.time_mode, exec)?;
    let range_bin = cfg.range_bin();
    let slow = dsp::slow_time_extract(&frames, range_bin, cfg.dsp.subsample, w.symbol_duration)?;
    let spectrum = dsp::doppler_spectrum(&slow, cfg.dsp.window)?;
    let map = if cfg.dsp.products.contains(&Product::Map) {
        Some(dsp::range_doppler_map(
            &frames,
            cfg.dsp.subsample,
            w.symbol_duration,
            cfg.dsp.window,
            exec,
        )?)
    } else {
        None
    };
    let metrics = Metrics::of(cfg, &spectrum, range_bin);
    Ok(RunOutput {
        frames,
        spectrum,
        map,
        range_bin,
        metrics,
    })
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn write_payloads(
    cfg: &RunConfig,
    index: usize,
    out: &RunOutput,
    dir: &Path,
) -> Result<Vec<PayloadRecord>, BatchError> {
    let fmt = cfg.dsp.format;
    cfg.dsp
        .products
        .iter()
        .map(|&product| {
            let bytes = format::encode(&out.matrix(product)?, fmt);
            let file = format!("run_{index:04}_{}.{}", product.name(), fmt.extension());
            let path = dir.join(&file);
            std::fs::write(&path, &bytes).map_err(io_err(&path))?;
            Ok(PayloadRecord {
                product,
                file,
                bytes: bytes.len() as u64,
                sha256: sha256_hex(&bytes),
            })
        })
        .collect()
}

/// Runs every sweep point of `cfg`, writing payloads and the manifest into
/// `cfg.output_dir`.
pub fn run_batch(cfg: &RunConfig, exec: Execution) -> Result<BatchReport, BatchError> {
    run_all(&cfg.expand()?, &cfg.output_dir, exec)
}

/// Runs already-expanded single-run configs into `dir`.
pub fn run_all(runs: &[RunConfig], dir: &Path, exec: Execution) -> Result<BatchReport, BatchError> {
    let dir = dir.to_path_buf();
    std::fs::create_dir_all(&dir).map_err(io_err(&dir))?;
    let mut records = Vec::with_capacity(runs.len());
    for (index, run) in runs.iter().enumerate() {
        let mut record = SignatureRecord {
            index,
            labels: Labels::of(run),
            config: run.raw.clone(),
            payloads: Vec::new(),
            metrics: None,
            error: None,
        };
        let result = simulate_run(run, exec).and_then(|out| {
            let payloads = write_payloads(run, index, &out, &dir)?;
            Ok((out.metrics, payloads))
        });
        match result {
            Ok((metrics, payloads)) => {
                record.metrics = Some(metrics);
                record.payloads = payloads;
            }
            Err(e) => record.error = Some(e.to_string()),
        }
        records.push(record);
    }
    let manifest = Manifest {
        format_version: format::VERSION,
        runs: records.len(),
        failed: records.iter().filter(|r| r.error.is_some()).count(),
        records,
    };
    let path = dir.join(MANIFEST);
    let mut text = serde_json::to_string_pretty(&manifest).map_err(|source| BatchError::Manifest {
        path: path.clone(),
        source,
    })?;
    text.push('\n');
    std::fs::write(&path, text).map_err(io_err(&path))?;
    Ok(BatchReport {
        output_dir: dir,
        manifest,
    })
}

pub fn read_manifest(dir: &Path) -> Result<Manifest, BatchError> {
    let path = dir.join(MANIFEST);
    let text = std::fs::read_to_string(&path).map_err(io_err(&path))?;
    serde_json::from_str(&text).map_err(|source| BatchError::Manifest { path, source })
}

/// Re-hashes every payload listed in the manifest of `dir`. Returns the
/// files whose size or hash no longer match.
pub fn verify_manifest(dir: &Path) -> Result<Vec<String>, BatchError> {
    let manifest = read_manifest(dir)?;
    let mut bad = Vec::new();
    for p in manifest.records.iter().flat_map(|r| &r.payloads) {
        match std::fs::read(dir.join(&p.file)) {
            Ok(bytes) if bytes.len() as u64 == p.bytes && sha256_hex(&bytes) == p.sha256 => {}
            _ => bad.push(p.file.clone()),
        }
    }
    Ok(bad)
}
