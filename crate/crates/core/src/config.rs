//! Run configuration files.
//!
//! Configs are TOML with the unit in every key name (`carrier_ghz`,
//! `blade_length_cm`, ...). A config may start from a named preset
//! (`preset = "setup1"`); its own keys are merged over the preset table by
//! table. Arrays, including `[[propellers]]`, replace the preset's array.
//!
//! ```toml
//! preset = "setup1"
//! seed = 7
//!
//! [geometry]
//! bistatic_angle_deg = 90.0
//!
//! [sweep]
//! rotation_rate_rpm = [1200.0, 1500.0, 1800.0]
//! ```
//!
//! A `[sweep]` table expands into the cartesian product of its lists, in
//! the order bistatic angle, rotation rate, blade count, SNR, seed (the last
//! varies fastest). `rotation_rate_rpm` and `blades` apply to every
//! propeller. `bistatic_angle_deg` places the receiver that many degrees of
//! azimuth away from the transmitter.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dsp::{SpreadOptions, Window};
use crate::format::Format;
use crate::geometry::{BistaticGeometry, Vec3};
use crate::scatter::{Propeller, TimeMode};
use crate::scene::{Scene, StaticScatterer};
use crate::waveform::{CarrierReference, OfdmConfig, WaveformError};

const SETUP1: &str = include_str!("../presets/setup1.toml");
const SETUP2: &str = include_str!("../presets/setup2.toml");

/// Names accepted by `preset = "..."`.
pub const PRESETS: [&str; 2] = ["setup1", "setup2"];

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unknown preset {0:?} (available: setup1, setup2)")]
    UnknownPreset(String),
    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    Invalid(Vec<String>),
}

/// Config file contents before validation. Every field is optional so that
/// presets and overrides can be merged and missing keys reported together.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub preset: Option<String>,
    pub seed: Option<u64>,
    pub output_dir: Option<String>,
    #[serde(default)]
    pub waveform: RawWaveform,
    #[serde(default)]
    pub geometry: RawGeometry,
    #[serde(default)]
    pub propellers: Vec<RawPropeller>,
    #[serde(default)]
    pub static_scatterers: Vec<RawStatic>,
    #[serde(default)]
    pub noise: RawNoise,
    #[serde(default)]
    pub dsp: RawDsp,
    #[serde(default)]
    pub sweep: RawSweep,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawWaveform {
    pub carrier_ghz: Option<f64>,
    pub n_subcarriers: Option<usize>,
    pub active_subcarriers: Option<usize>,
    /// First active subcarrier (1-based); the band is centered when absent.
    pub active_start: Option<usize>,
    pub symbol_duration_us: Option<f64>,
    pub n_symbols: Option<usize>,
    pub carrier_reference: Option<CarrierReference>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawGeometry {
    pub tx_range_m: Option<f64>,
    pub rx_range_m: Option<f64>,
    pub tx_zenith_deg: Option<f64>,
    pub rx_zenith_deg: Option<f64>,
    pub tx_azimuth_deg: Option<f64>,
    pub rx_azimuth_deg: Option<f64>,
    pub bistatic_angle_deg: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawPropeller {
    pub blades: Option<usize>,
    pub blade_length_cm: Option<f64>,
    pub rotation_rate_rpm: Option<f64>,
    pub initial_phase_deg: Option<f64>,
    pub hub_offset_m: Option<Vec3>,
    pub rcs_density_m2_per_m: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawStatic {
    pub offset_m: Option<Vec3>,
    pub rcs_m2: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawNoise {
    pub snr_db: Option<f64>,
    /// Noise variance relative to the mean static-return power per sample.
    pub noise_power: Option<f64>,
    pub tx_amplitude: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawDsp {
    pub subsample: Option<usize>,
    pub window: Option<Window>,
    pub time_mode: Option<TimeMode>,
    pub peak_threshold_db: Option<f64>,
    pub floor_margin_db: Option<f64>,
    pub dynamic_range_db: Option<f64>,
    pub max_gap_bins: Option<usize>,
    /// Fast-time sample used for the Doppler spectrum; defaults to the cell
    /// holding the scene origin.
    pub range_bin: Option<usize>,
    pub products: Option<Vec<Product>>,
    pub format: Option<Format>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawSweep {
    pub bistatic_angle_deg: Option<Vec<f64>>,
    pub rotation_rate_rpm: Option<Vec<f64>>,
    pub blades: Option<Vec<usize>>,
    pub snr_db: Option<Vec<f64>>,
    pub seed: Option<Vec<u64>>,
}

impl RawSweep {
    fn is_empty(&self) -> bool {
        *self == Self::default()
    }
}

/// Payloads written for each run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Product {
    /// Doppler spectrum of one range bin.
    Spectrum,
    /// Range-Doppler map.
    Map,
    /// Raw complex fast-time frames (symbols x samples).
    Frames,
}

impl Product {
    pub fn name(self) -> &'static str {
        match self {
            Product::Spectrum => "spectrum",
            Product::Map => "map",
            Product::Frames => "frames",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DspSettings {
    pub subsample: usize,
    pub window: Window,
    pub time_mode: TimeMode,
    pub peak_threshold_db: f64,
    pub spread: SpreadOptions,
    pub range_bin: Option<usize>,
    pub products: Vec<Product>,
    pub format: Format,
}

/// Sweep lists; an empty list leaves that parameter at its base value.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Sweep {
    pub bistatic_angle_deg: Vec<f64>,
    pub rotation_rate_rpm: Vec<f64>,
    pub blades: Vec<usize>,
    pub snr_db: Vec<f64>,
    pub seed: Vec<u64>,
}

impl Sweep {
    /// Number of runs the sweep expands to.
    pub fn len(&self) -> usize {
        [
            self.bistatic_angle_deg.len(),
            self.rotation_rate_rpm.len(),
            self.blades.len(),
            self.snr_db.len(),
            self.seed.len(),
        ]
        .iter()
        .map(|&n| n.max(1))
        .product()
    }

    pub fn is_empty(&self) -> bool {
        *self == Self::default()
    }
}

/// A validated configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// The merged file contents this config was built from (preset resolved).
    pub raw: RawConfig,
    pub waveform: OfdmConfig,
    pub geometry: BistaticGeometry,
    pub scene: Scene,
    pub dsp: DspSettings,
    pub sweep: Sweep,
    pub seed: u64,
    pub output_dir: PathBuf,
}

/// Reads and validates a config file.
pub fn load_config(path: impl AsRef<Path>) -> Result<RunConfig, ConfigError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text)
}

/// Parses and validates config text.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    RunConfig::from_raw(resolve(text)?)
}

/// Reads a config file and merges it over its preset without validating,
/// so callers can apply overrides first.
pub fn load_raw(path: impl AsRef<Path>) -> Result<RawConfig, ConfigError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    resolve(&text)
}

/// The raw contents of a preset.
pub fn preset_raw(name: &str) -> Result<RawConfig, ConfigError> {
    parse_raw(preset_text(name)?)
}

/// A preset as a validated config.
pub fn preset(name: &str) -> Result<RunConfig, ConfigError> {
    RunConfig::from_raw(preset_raw(name)?)
}

fn preset_text(name: &str) -> Result<&'static str, ConfigError> {
    match name {
        "setup1" => Ok(SETUP1),
        "setup2" => Ok(SETUP2),
        other => Err(ConfigError::UnknownPreset(other.to_string())),
    }
}

fn parse_error(text: &str, err: toml::de::Error) -> ConfigError {
    let offset = err.span().map_or(0, |s| s.start);
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
    ConfigError::Parse {
        line,
        column,
        message: err.message().trim().to_string(),
    }
}

fn parse_raw(text: &str) -> Result<RawConfig, ConfigError> {
    toml::from_str(text).map_err(|e| parse_error(text, e))
}

/// Keys that select the same quantity; setting one in an override drops the
/// other inherited from the preset.
const ALTERNATIVES: [(&str, &str, &str); 2] = [
    ("geometry", "bistatic_angle_deg", "rx_azimuth_deg"),
    ("noise", "snr_db", "noise_power"),
];

fn merge(base: &mut toml::Table, over: toml::Table) {
    for (key, value) in over {
        match (base.get_mut(&key), value) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            (_, value) => {
                base.insert(key, value);
            }
        }
    }
}

/// Parses `text` (checking keys and types with positions) and merges it
/// over its preset, if any.
fn resolve(text: &str) -> Result<RawConfig, ConfigError> {
    let own = parse_raw(text)?;
    let Some(name) = own.preset.as_deref() else {
        return Ok(own);
    };
    let mut base: toml::Table = preset_text(name)?.parse().map_err(|e| parse_error(text, e))?;
    let over: toml::Table = text.parse().map_err(|e| parse_error(text, e))?;
    for (table, a, b) in ALTERNATIVES {
        let set = |key| over.get(table).and_then(|t| t.get(key)).is_some();
        if let Some(toml::Value::Table(t)) = base.get_mut(table) {
            if set(a) && !set(b) {
                t.remove(b);
            } else if set(b) && !set(a) {
                t.remove(a);
            }
        }
    }
    merge(&mut base, over);
    base.remove("preset");
    toml::Value::Table(base).try_into().map_err(|e| parse_error(text, e))
}

/// Collects violations while converting raw fields.
struct Checker {
    errors: Vec<String>,
}

impl Checker {
    fn required<T: Copy>(&mut self, value: Option<T>, field: &str) -> Option<T> {
        if value.is_none() {
            self.errors.push(format!("{field}: missing"));
        }
        value
    }

    fn positive(&mut self, value: Option<f64>, field: &str) -> Option<f64> {
        let v = self.required(value, field)?;
        if v.is_finite() && v > 0.0 {
            Some(v)
        } else {
            self.errors.push(format!("{field}: must be positive, got {v}"));
            None
        }
    }

    fn finite(&mut self, value: f64, field: &str) -> Option<f64> {
        if value.is_finite() {
            Some(value)
        } else {
            self.errors.push(format!("{field}: must be finite, got {value}"));
            None
        }
    }

    fn fail(&mut self, msg: String) {
        self.errors.push(msg);
    }
}

impl RunConfig {
    /// Validates raw contents, reporting every violation found.
    pub fn from_raw(raw: RawConfig) -> Result<Self, ConfigError> {
        let mut c = Checker { errors: Vec::new() };
        if let Some(name) = &raw.preset {
            // presets are resolved by `parse_config`; a leftover is a caller error
            c.fail(format!("preset: unresolved preset {name:?}"));
        }

        let waveform = build_waveform(&mut c, &raw.waveform);
        let geometry = build_geometry(&mut c, &raw.geometry);
        let scene = build_scene(&mut c, &raw);
        let dsp = build_dsp(&mut c, &raw.dsp);
        let sweep = build_sweep(&mut c, &raw.sweep);

        if let (Some(geometry), Some(scene)) = (&geometry, &scene) {
            if let Err(e) = scene.validate(geometry) {
                c.fail(format!("scene: {e}"));
            }
        }
        if let (Some(w), Some(d)) = (&waveform, &dsp) {
            if w.n_symbols / d.subsample < 2 {
                c.fail(format!(
                    "dsp.subsample: {} leaves fewer than 2 of {} symbols",
                    d.subsample, w.n_symbols
                ));
            }
            if let Some(bin) = d.range_bin {
                if bin >= w.n_subcarriers {
                    c.fail(format!("dsp.range_bin: {bin} outside 0..{}", w.n_subcarriers));
                }
            }
        }

        match (waveform, geometry, scene, dsp, c.errors.is_empty()) {
            (Some(waveform), Some(geometry), Some(mut scene), Some(dsp), true) => {
                let seed = raw.seed.unwrap_or(0);
                scene.rng_seed = seed;
                let output_dir = PathBuf::from(raw.output_dir.clone().unwrap_or_else(|| "out".into()));
                let cfg = Self {
                    raw,
                    waveform,
                    geometry,
                    scene,
                    dsp,
                    sweep,
                    seed,
                    output_dir,
                };
                cfg.check_expansion()?;
                Ok(cfg)
            }
            _ => Err(ConfigError::Invalid(c.errors)),
        }
    }

    fn check_expansion(&self) -> Result<(), ConfigError> {
        if self.sweep.is_empty() {
            return Ok(());
        }
        let mut errors = Vec::new();
        for raw in self.expand_raw() {
            if let Err(ConfigError::Invalid(errs)) = RunConfig::from_raw(raw) {
                for e in errs {
                    if !errors.contains(&e) {
                        errors.push(e);
                    }
                }
            }
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::Invalid(errors))
        }
    }

    fn expand_raw(&self) -> Vec<RawConfig> {
        let mut base = self.raw.clone();
        base.sweep = RawSweep::default();
        let mut out = vec![base];
        let s = &self.sweep;
        out = product(out, &s.bistatic_angle_deg, |r, &b| {
            r.geometry.bistatic_angle_deg = Some(b);
            r.geometry.rx_azimuth_deg = None;
        });
        out = product(out, &s.rotation_rate_rpm, |r, &rpm| {
            r.propellers.iter_mut().for_each(|p| p.rotation_rate_rpm = Some(rpm));
        });
        out = product(out, &s.blades, |r, &n| {
            r.propellers.iter_mut().for_each(|p| p.blades = Some(n));
        });
        out = product(out, &s.snr_db, |r, &snr| {
            r.noise.snr_db = Some(snr);
            r.noise.noise_power = None;
        });
        product(out, &s.seed, |r, &seed| r.seed = Some(seed))
    }

    /// One single-run config per sweep point (the config itself when there
    /// is no sweep).
    pub fn expand(&self) -> Result<Vec<RunConfig>, ConfigError> {
        if self.sweep.is_empty() {
            return Ok(vec![self.clone()]);
        }
        self.expand_raw().into_iter().map(RunConfig::from_raw).collect()
    }

    /// Serializes the resolved config back to TOML.
    pub fn to_toml(&self) -> String {
        toml::to_string(&self.raw).expect("raw config is always representable")
    }

    /// Fast-time sample analyzed for the Doppler spectrum.
    pub fn range_bin(&self) -> usize {
        self.dsp.range_bin.unwrap_or_else(|| {
            self.waveform
                .range_to_cell(self.geometry.r_t + self.geometry.r_r)
                .unwrap_or(0)
        })
    }
}

fn product<T>(runs: Vec<RawConfig>, values: &[T], apply: impl Fn(&mut RawConfig, &T)) -> Vec<RawConfig> {
    if values.is_empty() {
        return runs;
    }
    runs.into_iter()
        .flat_map(|r| {
            values
                .iter()
                .map(|v| {
                    let mut r = r.clone();
                    apply(&mut r, v);
                    r
                })
                .collect::<Vec<_>>()
        })
        .collect()
}

fn build_waveform(c: &mut Checker, w: &RawWaveform) -> Option<OfdmConfig> {
    let f0 = c.positive(w.carrier_ghz, "waveform.carrier_ghz");
    let n = c.required(w.n_subcarriers, "waveform.n_subcarriers");
    let k = c.required(w.active_subcarriers, "waveform.active_subcarriers");
    let t = c.positive(w.symbol_duration_us, "waveform.symbol_duration_us");
    let m = c.required(w.n_symbols, "waveform.n_symbols");
    let (f0, n, k, t, m) = (f0?, n?, k?, t?, m?);
    let cfg = OfdmConfig {
        f0: f0 * 1e9,
        n_subcarriers: n,
        active_start: w.active_start.unwrap_or(n.saturating_sub(k) / 2 + 1),
        active_len: k,
        symbol_duration: t * 1e-6,
        n_symbols: m,
        carrier_reference: w.carrier_reference.unwrap_or_default(),
    };
    match cfg.validate() {
        Ok(()) => Some(cfg),
        Err(e) => {
            let key = match e {
                WaveformError::NoSubcarriers => "waveform.n_subcarriers",
                WaveformError::NoSymbols => "waveform.n_symbols",
                WaveformError::EmptyActiveBand => "waveform.active_subcarriers",
                WaveformError::ActiveBandOutOfRange { .. } => "waveform.active_start",
                _ => "waveform",
            };
            c.fail(format!("{key}: {e}"));
            None
        }
    }
}

fn build_geometry(c: &mut Checker, g: &RawGeometry) -> Option<BistaticGeometry> {
    let r_t = c.positive(g.tx_range_m, "geometry.tx_range_m");
    let r_r = c.positive(g.rx_range_m, "geometry.rx_range_m");
    let zen_t = c.finite(g.tx_zenith_deg.unwrap_or(90.0), "geometry.tx_zenith_deg");
    let zen_r = c.finite(g.rx_zenith_deg.unwrap_or(90.0), "geometry.rx_zenith_deg");
    let az_t = c.finite(g.tx_azimuth_deg.unwrap_or(0.0), "geometry.tx_azimuth_deg");
    let az_r = match (g.rx_azimuth_deg, g.bistatic_angle_deg) {
        (Some(az), None) => c.finite(az, "geometry.rx_azimuth_deg"),
        (None, Some(beta)) => {
            let beta = c.finite(beta, "geometry.bistatic_angle_deg")?;
            if !(0.0..=180.0).contains(&beta) {
                c.fail(format!("geometry.bistatic_angle_deg: must lie in [0, 180], got {beta}"));
                return None;
            }
            az_t.map(|a| a + beta)
        }
        (Some(_), Some(_)) => {
            c.fail("geometry: set either rx_azimuth_deg or bistatic_angle_deg, not both".into());
            None
        }
        (None, None) => {
            c.fail("geometry.bistatic_angle_deg: missing (or give rx_azimuth_deg)".into());
            None
        }
    };
    let wrap = |deg: f64| {
        let rad = deg.to_radians().rem_euclid(std::f64::consts::TAU);
        if rad >= std::f64::consts::TAU {
            0.0
        } else {
            rad
        }
    };
    let geom = BistaticGeometry::new(
        r_t?,
        r_r?,
        zen_t?.to_radians(),
        zen_r?.to_radians(),
        wrap(az_t?),
        wrap(az_r?),
    );
    match geom {
        Ok(g) => Some(g),
        Err(e) => {
            c.fail(format!("geometry: {e}"));
            None
        }
    }
}

fn build_scene(c: &mut Checker, raw: &RawConfig) -> Option<Scene> {
    let mut scene = Scene::default();
    let mut ok = true;
    for (k, p) in raw.propellers.iter().enumerate() {
        let field = |name: &str| format!("propellers[{k}].{name}");
        let blades = c.required(p.blades, &field("blades"));
        let length = c.positive(p.blade_length_cm, &field("blade_length_cm"));
        let rpm = c.required(p.rotation_rate_rpm, &field("rotation_rate_rpm"));
        let rpm = rpm.and_then(|v| c.finite(v, &field("rotation_rate_rpm")));
        let density = c.required(p.rcs_density_m2_per_m, &field("rcs_density_m2_per_m"));
        let phase = c.finite(p.initial_phase_deg.unwrap_or(0.0), &field("initial_phase_deg"));
        let hub = p.hub_offset_m.unwrap_or([0.0; 3]);
        match (blades, length, rpm, density, phase) {
            (Some(blades), Some(length), Some(rpm), Some(density), Some(phase)) => {
                let mut prop = Propeller::from_rpm(blades, length * 1e-2, rpm, density);
                prop.initial_phase = phase.to_radians();
                prop.center_offset = hub;
                match prop.validate() {
                    Ok(()) => scene.propellers.push(prop),
                    Err(e) => {
                        c.fail(format!("propellers[{k}]: {e}"));
                        ok = false;
                    }
                }
            }
            _ => ok = false,
        }
    }
    for (k, s) in raw.static_scatterers.iter().enumerate() {
        let rcs = c.required(s.rcs_m2, &format!("static_scatterers[{k}].rcs_m2"));
        match rcs {
            Some(rcs) if rcs >= 0.0 => scene.static_scatterers.push(StaticScatterer {
                position: s.offset_m.unwrap_or([0.0; 3]),
                rcs,
            }),
            Some(rcs) => {
                c.fail(format!(
                    "static_scatterers[{k}].rcs_m2: must be non-negative, got {rcs}"
                ));
                ok = false;
            }
            None => ok = false,
        }
    }
    if raw.propellers.is_empty() && raw.static_scatterers.is_empty() {
        c.fail("scene: needs at least one propeller or static scatterer".into());
        ok = false;
    }

    let n = &raw.noise;
    match (n.snr_db, n.noise_power) {
        (Some(_), Some(_)) => {
            c.fail("noise: set either snr_db or noise_power, not both".into());
            ok = false;
        }
        (Some(snr), None) => match c.finite(snr, "noise.snr_db") {
            Some(snr) => scene.set_snr_db(snr),
            None => ok = false,
        },
        (None, Some(p)) if p.is_finite() && p >= 0.0 => scene.noise_power = p,
        (None, Some(p)) => {
            c.fail(format!("noise.noise_power: must be non-negative, got {p}"));
            ok = false;
        }
        (None, None) => {}
    }
    if let Some(a) = n.tx_amplitude {
        match c.positive(Some(a), "noise.tx_amplitude") {
            Some(a) => scene.tx_amplitude = a,
            None => ok = false,
        }
    }
    ok.then_some(scene)
}

fn build_dsp(c: &mut Checker, d: &RawDsp) -> Option<DspSettings> {
    let defaults = SpreadOptions::default();
    let subsample = d.subsample.unwrap_or(1);
    if subsample == 0 {
        c.fail("dsp.subsample: must be at least 1".into());
    }
    let products = d.products.clone().unwrap_or_else(|| vec![Product::Spectrum]);
    if products.is_empty() {
        c.fail("dsp.products: empty list".into());
    }
    let settings = DspSettings {
        subsample,
        window: d.window.unwrap_or_default(),
        time_mode: d.time_mode.unwrap_or_default(),
        peak_threshold_db: c.finite(d.peak_threshold_db.unwrap_or(10.0), "dsp.peak_threshold_db")?,
        spread: SpreadOptions {
            floor_margin_db: c.finite(
                d.floor_margin_db.unwrap_or(defaults.floor_margin_db),
                "dsp.floor_margin_db",
            )?,
            max_gap_bins: d.max_gap_bins.unwrap_or(defaults.max_gap_bins),
            dynamic_range_db: c.finite(
                d.dynamic_range_db.unwrap_or(defaults.dynamic_range_db),
                "dsp.dynamic_range_db",
            )?,
        },
        range_bin: d.range_bin,
        products,
        format: d.format.unwrap_or_default(),
    };
    (subsample > 0 && !settings.products.is_empty()).then_some(settings)
}

fn build_sweep(c: &mut Checker, s: &RawSweep) -> Sweep {
    fn list<T: Clone>(c: &mut Checker, v: &Option<Vec<T>>, field: &str) -> Vec<T> {
        match v {
            Some(v) if v.is_empty() => {
                c.fail(format!("sweep.{field}: empty list"));
                Vec::new()
            }
            Some(v) => v.clone(),
            None => Vec::new(),
        }
    }
    if s.is_empty() {
        return Sweep::default();
    }
    Sweep {
        bistatic_angle_deg: list(c, &s.bistatic_angle_deg, "bistatic_angle_deg"),
        rotation_rate_rpm: list(c, &s.rotation_rate_rpm, "rotation_rate_rpm"),
        blades: list(c, &s.blades, "blades"),
        snr_db: list(c, &s.snr_db, "snr_db"),
        seed: list(c, &s.seed, "seed"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn invalid(text: &str) -> Vec<String> {
        match parse_config(text) {
            Err(ConfigError::Invalid(errs)) => errs,
            other => panic!("expected validation errors, got {other:?}"),
        }
    }

    #[test]
    fn setup1_preset_values() {
        let cfg = preset("setup1").unwrap();
        let w = &cfg.waveform;
        assert_eq!(w.f0, 3.7e9);
        assert_eq!((w.n_subcarriers, w.active_len, w.n_symbols), (1600, 1280, 16384));
        assert_relative_eq!(w.symbol_duration, 8e-6, max_relative = 1e-15);
        assert_relative_eq!(w.bandwidth(), 200e6, max_relative = 1e-12);
        let p = &cfg.scene.propellers[0];
        assert_eq!(p.n_blades, 2);
        assert_relative_eq!(p.blade_length, 0.1655, max_relative = 1e-15);
        assert_relative_eq!(p.rotation_frequency(), 25.0, max_relative = 1e-12);
        assert_eq!(cfg.dsp.subsample, 8);
        assert_relative_eq!(cfg.geometry.bistatic_angle().to_degrees(), 60.0, epsilon = 1e-9);
    }

    #[test]
    fn setup2_preset_values() {
        let cfg = preset("setup2").unwrap();
        let w = &cfg.waveform;
        assert_eq!(w.f0, 7e9);
        assert_eq!((w.n_subcarriers, w.active_len), (2500, 2048));
        assert_relative_eq!(w.symbol_duration, 1.02e-6, max_relative = 1e-15);
        assert_relative_eq!(w.range_resolution(), 0.0612, max_relative = 2e-3);
        let rates: Vec<f64> = cfg
            .scene
            .propellers
            .iter()
            .map(|p| p.rotation_frequency() * 60.0)
            .collect();
        assert_relative_eq!(rates[0], 1500.0, max_relative = 1e-12);
        assert_relative_eq!(rates[1], 2000.0, max_relative = 1e-12);
    }

    #[test]
    fn override_merges_over_preset() {
        let cfg = parse_config("preset = \"setup1\"\nseed = 9\n[geometry]\nrx_azimuth_deg = 90.0\n").unwrap();
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.scene.rng_seed, 9);
        assert_relative_eq!(cfg.geometry.bistatic_angle().to_degrees(), 90.0, epsilon = 1e-9);
        assert_eq!(cfg.waveform.n_subcarriers, 1600);
        assert!(cfg.raw.preset.is_none());
    }

    #[test]
    fn missing_blade_length_is_named() {
        let text = SETUP1.replace("blade_length_cm = 16.55\n", "");
        let errs = invalid(&text);
        assert_eq!(errs, vec!["propellers[0].blade_length_cm: missing".to_string()]);
    }

    #[test]
    fn reports_every_violation() {
        let text = SETUP1
            .replace("blade_length_cm = 16.55\n", "")
            .replace("carrier_ghz = 3.7", "carrier_ghz = -1.0")
            .replace("subsample = 8", "subsample = 0");
        let errs = invalid(&text);
        assert_eq!(errs.len(), 3, "{errs:?}");
        assert!(errs.iter().any(|e| e.starts_with("waveform.carrier_ghz")));
        assert!(errs.iter().any(|e| e.starts_with("dsp.subsample")));
    }

    #[test]
    fn unknown_key_reports_position() {
        let err = parse_config("seed = 1\n[waveform]\ncarrier_hz = 3.7e9\n").unwrap_err();
        match err {
            ConfigError::Parse { line, message, .. } => {
                assert_eq!(line, 3);
                assert!(message.contains("carrier_hz"), "{message}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn syntax_error_reports_line() {
        let err = parse_config("seed = 1\n\n[waveform\n").unwrap_err();
        assert!(matches!(err, ConfigError::Parse { line: 3, .. }), "{err:?}");
    }

    #[test]
    fn unknown_preset() {
        assert!(matches!(
            parse_config("preset = \"setup9\""),
            Err(ConfigError::UnknownPreset(_))
        ));
    }

    #[test]
    fn sweep_expands_cartesian_product() {
        let text = "preset = \"setup1\"\n[sweep]\nbistatic_angle_deg = [30.0, 60.0, 90.0, 120.0, 150.0, 180.0]\nrotation_rate_rpm = [1200.0, 1500.0, 1800.0]\n";
        let cfg = parse_config(text).unwrap();
        assert_eq!(cfg.sweep.len(), 18);
        let runs = cfg.expand().unwrap();
        assert_eq!(runs.len(), 18);
        assert_relative_eq!(runs[0].geometry.bistatic_angle().to_degrees(), 30.0, epsilon = 1e-9);
        assert_relative_eq!(runs[4].geometry.bistatic_angle().to_degrees(), 60.0, epsilon = 1e-9);
        assert_relative_eq!(
            runs[4].scene.propellers[0].rotation_frequency() * 60.0,
            1500.0,
            max_relative = 1e-12
        );
        assert!(runs.iter().all(|r| r.sweep.is_empty()));
    }

    #[test]
    fn six_angles_expand_to_six_runs() {
        let text = "preset = \"setup1\"\n[sweep]\nbistatic_angle_deg = [30.0, 60.0, 90.0, 120.0, 150.0, 180.0]\n";
        assert_eq!(parse_config(text).unwrap().expand().unwrap().len(), 6);
    }

    #[test]
    fn sweep_points_are_validated() {
        let errs = invalid("preset = \"setup1\"\n[sweep]\nblades = [2, 0]\n");
        assert!(errs.iter().any(|e| e.contains("propellers[0]")), "{errs:?}");
        let errs = invalid("preset = \"setup1\"\n[sweep]\nseed = []\n");
        assert_eq!(errs, vec!["sweep.seed: empty list".to_string()]);
    }

    #[test]
    fn resolved_config_round_trips() {
        let cfg = parse_config("preset = \"setup2\"\nseed = 3\n").unwrap();
        let again = parse_config(&cfg.to_toml()).unwrap();
        assert_eq!(cfg, again);
    }

    #[test]
    fn snr_and_noise_power_are_exclusive() {
        let errs = invalid(&SETUP1.replace("noise_power = 0.0", "noise_power = 0.0\nsnr_db = 40.0"));
        assert!(errs[0].starts_with("noise:"));
        let cfg = parse_config("preset = \"setup1\"\n[noise]\nsnr_db = 20.0\n").unwrap();
        assert_relative_eq!(cfg.scene.noise_power, 0.01, max_relative = 1e-12);
        assert!(preset("setup1").unwrap().scene.snr_db().is_infinite());
    }

    #[test]
    fn default_range_bin_holds_the_origin() {
        let cfg = preset("setup1").unwrap();
        let bin = cfg.range_bin();
        let r_o = cfg.geometry.r_t + cfg.geometry.r_r;
        let cell = cfg.waveform.range_cell();
        assert!(((bin - 1) as f64 * cell..bin as f64 * cell).contains(&r_o));
    }
}
