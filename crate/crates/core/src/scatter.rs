//! Propeller echo models.
//!
//! Three models live here:
//!
//! * [`closed_form_returns`] integrates each blade analytically over the
//!   part of it that falls inside a fast-time range cell. This is the model
//!   used for simulation.
//! * [`point_oracle_returns`] discretizes each blade into `K` point
//!   scatterers and sums their windowed returns. It converges to the closed
//!   form as `K` grows and is used to check it.
//! * [`classic_cw_returns`] is the narrowband monostatic rotor model,
//!   kept as a reference for the monostatic limit.
//!
//! Blade `i` (1-based) of a rotor has rotation phase
//! `ωt + φ_B + φ_0 + 2π(i-1)/N_B`, where `φ_B` comes from the rotor's
//! [`BistaticFactors`] and `φ_0` is the propeller's initial phase.
//!
//! Amplitudes: a blade is a uniform line with total RCS
//! `rcs_density · L_B`. Its return amplitude per unit length at subcarrier
//! `n` is `g_n = γ(σ = rcs_density·L_B, R_T, R_R, f_n) / L_B`, so a blade
//! segment `[l1, l2]` contributes `g_n ∫ exp(-j k_n R_P(l)) dl`. The closed
//! form writes this integral as `γ_ni (l2-l1)/2 · sinc(...)`, hence
//! `γ_ni = 2 g_n`.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use thiserror::Error;

use crate::geometry::{bistatic_factors, BistaticFactors, BistaticGeometry, GeometryError, Vec3};
use crate::waveform::{ModulationGrid, OfdmConfig};
use crate::SPEED_OF_LIGHT;

#[derive(Debug, Error, PartialEq)]
pub enum ScatterError {
    #[error("range must be positive, got {0} m")]
    NonPositiveRange(f64),
    #[error("frequency must be positive, got {0} Hz")]
    NonPositiveFrequency(f64),
    #[error("RCS must be non-negative, got {0}")]
    NegativeRcs(f64),
    #[error("propeller needs at least one blade")]
    NoBlades,
    #[error("blade length must be positive, got {0} m")]
    BadBladeLength(f64),
    #[error("rotation rate must be finite, got {0} rad/s")]
    BadRotationRate(f64),
    #[error("rotor geometry: {0}")]
    Geometry(#[from] GeometryError),
}

/// Below this value of `A_B·|cos(·)|` a blade is treated as lying entirely
/// at the hub range.
pub const DEGENERATE_PROJECTION: f64 = 1e-9;

/// Rotor description.
#[derive(Debug, Clone, PartialEq)]
pub struct Propeller {
    pub n_blades: usize,
    /// Blade length (propeller radius) L_B, m.
    pub blade_length: f64,
    /// Angular rate ω, rad/s; the sign gives the spin direction.
    pub rotation_rate: f64,
    /// Rotation phase of blade 1 at t = 0, rad.
    pub initial_phase: f64,
    /// Hub position relative to the scene origin, m.
    pub center_offset: Vec3,
    /// Scattering strength per unit blade length, m²/m.
    pub rcs_density: f64,
}

impl Propeller {
    /// Rotor at the scene origin.
    pub fn new(n_blades: usize, blade_length: f64, rotation_rate: f64, rcs_density: f64) -> Self {
        Self {
            n_blades,
            blade_length,
            rotation_rate,
            initial_phase: 0.0,
            center_offset: [0.0; 3],
            rcs_density,
        }
    }

    pub fn from_rpm(n_blades: usize, blade_length: f64, rpm: f64, rcs_density: f64) -> Self {
        Self::new(n_blades, blade_length, rpm * TAU / 60.0, rcs_density)
    }

    pub fn validate(&self) -> Result<(), ScatterError> {
        if self.n_blades == 0 {
            return Err(ScatterError::NoBlades);
        }
        if !(self.blade_length.is_finite() && self.blade_length > 0.0) {
            return Err(ScatterError::BadBladeLength(self.blade_length));
        }
        if !self.rotation_rate.is_finite() {
            return Err(ScatterError::BadRotationRate(self.rotation_rate));
        }
        if !(self.rcs_density >= 0.0) {
            return Err(ScatterError::NegativeRcs(self.rcs_density));
        }
        Ok(())
    }

    /// Rotation frequency in Hz (unsigned).
    pub fn rotation_frequency(&self) -> f64 {
        self.rotation_rate.abs() / TAU
    }

    pub fn tip_speed(&self) -> f64 {
        self.rotation_rate.abs() * self.blade_length
    }

    /// Spacing N_B·f_rot of the blade-flash spectral lines.
    pub fn flash_spacing(&self) -> f64 {
        self.n_blades as f64 * self.rotation_frequency()
    }

    /// Phase offset of blade `i` (1-based) relative to blade 1.
    pub fn blade_offset(&self, i: usize) -> f64 {
        self.initial_phase + TAU * (i - 1) as f64 / self.n_blades as f64
    }
}

/// How the rotation phase is sampled inside a symbol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeMode {
    /// `t = (m + μ/N)·T` for every fast-time sample.
    #[default]
    Exact,
    /// `t = m·T` for the whole symbol.
    FrozenPerSymbol,
}

impl TimeMode {
    pub fn time(self, cfg: &OfdmConfig, m: usize, mu: usize) -> f64 {
        match self {
            TimeMode::Exact => cfg.sample_time(m, mu),
            TimeMode::FrozenPerSymbol => cfg.sample_time(m, 0),
        }
    }
}

/// A propeller together with the geometry seen from its own hub.
#[derive(Debug, Clone, PartialEq)]
pub struct RotorView {
    pub propeller: Propeller,
    pub geometry: BistaticGeometry,
    pub factors: BistaticFactors,
}

impl RotorView {
    /// Re-centers `scene_geometry` on the propeller hub.
    pub fn new(propeller: Propeller, scene_geometry: &BistaticGeometry) -> Result<Self, ScatterError> {
        propeller.validate()?;
        let geometry = scene_geometry.relative_to(propeller.center_offset)?;
        let factors = bistatic_factors(&geometry);
        Ok(Self {
            propeller,
            geometry,
            factors,
        })
    }

    /// Rotation phase of blade `i` at time `t`, including φ_B.
    pub fn blade_phase(&self, i: usize, t: f64) -> f64 {
        self.propeller.rotation_rate * t + self.factors.phi_b + self.propeller.blade_offset(i)
    }

    /// Fast-time cells any point of the rotor can occupy.
    fn cell_span(&self, cfg: &OfdmConfig) -> std::ops::Range<usize> {
        let reach = self.factors.a_b * self.propeller.blade_length;
        cell_span(cfg, self.factors.r_o - reach, self.factors.r_o + reach)
    }
}

fn cell_span(cfg: &OfdmConfig, lo: f64, hi: f64) -> std::ops::Range<usize> {
    let dr = cfg.range_cell();
    let n = cfg.n_subcarriers as f64;
    let first = ((lo / dr).floor() + 1.0).clamp(0.0, n);
    let last = ((hi / dr).floor() + 2.0).clamp(0.0, n);
    first as usize..last as usize
}

/// One received symbol in fast time.
#[derive(Debug, Clone, PartialEq)]
pub struct EchoFrame {
    pub samples: Vec<Complex64>,
    pub symbol_index: usize,
    /// Bistatic range spanned by one fast-time sample, m.
    pub range_cell: f64,
}

pub type FastTimeFrame = EchoFrame;

impl EchoFrame {
    pub fn zeros(cfg: &OfdmConfig, m: usize) -> Self {
        Self {
            samples: vec![Complex64::new(0.0, 0.0); cfg.n_subcarriers],
            symbol_index: m,
            range_cell: cfg.range_cell(),
        }
    }
}

/// Radar-equation amplitude γ = γ0·sqrt(cσ / (4π³ R⁴ f²)).
pub fn radar_amplitude(gamma0: f64, sigma: f64, range: f64, f: f64) -> Result<f64, ScatterError> {
    radar_amplitude_bistatic(gamma0, sigma, range, range, f)
}

/// Bistatic form of [`radar_amplitude`] with R⁴ replaced by R_T²·R_R².
pub fn radar_amplitude_bistatic(gamma0: f64, sigma: f64, r_t: f64, r_r: f64, f: f64) -> Result<f64, ScatterError> {
    for r in [r_t, r_r] {
        if !(r > 0.0) {
            return Err(ScatterError::NonPositiveRange(r));
        }
    }
    if !(f > 0.0) {
        return Err(ScatterError::NonPositiveFrequency(f));
    }
    if !(sigma >= 0.0) {
        return Err(ScatterError::NegativeRcs(sigma));
    }
    let denom = 4.0 * PI.powi(3) * (r_t * r_t) * (r_r * r_r) * f * f;
    Ok(gamma0 * (SPEED_OF_LIGHT * sigma / denom).sqrt())
}

/// Unnormalized sinc, sin(x)/x.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// Blade interval `[l1, l2]` whose bistatic range falls inside fast-time
/// cell `mu` at time `t`.
///
/// The two cell boundaries are mapped to blade positions `a` and `b`;
/// `l1 = median{0, a, b}` and `l2 = median{L_B, a, b}`. Results are clamped
/// to `[0, L_B]`, so a cell that misses the blade yields `l1 == l2`.
pub fn blade_limits(
    mu: usize,
    i: usize,
    factors: &BistaticFactors,
    prop: &Propeller,
    cfg: &OfdmConfig,
    t: f64,
) -> (f64, f64) {
    let dr = cfg.range_cell();
    let upper = mu as f64 * dr;
    let lower = upper - dr;
    let len = prop.blade_length;
    let proj = factors.a_b * (prop.rotation_rate * t + factors.phi_b + prop.blade_offset(i)).cos();

    if proj.abs() < DEGENERATE_PROJECTION {
        return if (lower..upper).contains(&factors.r_o) {
            (0.0, len)
        } else {
            (0.0, 0.0)
        };
    }
    let a = (factors.r_o - lower) / proj;
    let b = (factors.r_o - upper) / proj;
    let l1 = median3(0.0, a, b).clamp(0.0, len);
    let l2 = median3(len, a, b).clamp(0.0, len);
    (l1, l2)
}

fn median3(x: f64, y: f64, z: f64) -> f64 {
    x.max(y).min(x.min(y).max(z))
}

/// Per-subcarrier constants of the active band.
#[derive(Debug, Clone)]
pub(crate) struct ActiveBand {
    /// Subcarrier index n (1-based).
    pub index: Vec<usize>,
    /// Wavenumber ω_n / c.
    pub wavenumber: Vec<f64>,
    pub frequency: Vec<f64>,
}

impl ActiveBand {
    pub fn new(cfg: &OfdmConfig) -> Self {
        let index: Vec<usize> = cfg.active_band().collect();
        let frequency: Vec<f64> = index.iter().map(|&n| cfg.subcarrier_frequency(n)).collect();
        let wavenumber = frequency.iter().map(|f| TAU * f / SPEED_OF_LIGHT).collect();
        Self {
            index,
            wavenumber,
            frequency,
        }
    }

    /// Amplitude of a point with RCS `sigma` at leg ranges `r_t`, `r_r`, per subcarrier.
    pub fn amplitudes(&self, gamma0: f64, sigma: f64, r_t: f64, r_r: f64) -> Result<Vec<f64>, ScatterError> {
        self.frequency
            .iter()
            .map(|&f| radar_amplitude_bistatic(gamma0, sigma, r_t, r_r, f))
            .collect()
    }

    /// exp(j2π n μ / N) evaluated exactly through integer reduction.
    fn fast_time_phase(n: usize, mu: usize, n_sub: usize) -> f64 {
        TAU * ((n * mu) % n_sub) as f64 / n_sub as f64
    }
}

/// Precomputed rotor state for repeated frame evaluation.
#[derive(Debug, Clone)]
pub(crate) struct RotorKernel<'a> {
    pub rotor: &'a RotorView,
    band: &'a ActiveBand,
    /// g_n, amplitude per unit blade length.
    line_amplitude: Vec<f64>,
}

impl<'a> RotorKernel<'a> {
    pub fn new(rotor: &'a RotorView, band: &'a ActiveBand, gamma0: f64) -> Result<Self, ScatterError> {
        let p = &rotor.propeller;
        let g = &rotor.geometry;
        let line_amplitude = band
            .amplitudes(gamma0, p.rcs_density * p.blade_length, g.r_t, g.r_r)?
            .into_iter()
            .map(|a| a / p.blade_length)
            .collect();
        Ok(Self {
            rotor,
            band,
            line_amplitude,
        })
    }

    /// Adds the closed-form return of every blade to `out` for cells in `cells`.
    pub fn add_closed_form(
        &self,
        cfg: &OfdmConfig,
        grid: &ModulationGrid,
        m: usize,
        mode: TimeMode,
        cells: std::ops::Range<usize>,
        out: &mut [Complex64],
    ) {
        let rotor = self.rotor;
        let (prop, factors) = (&rotor.propeller, &rotor.factors);
        let d = grid.row(m);
        let n_sub = cfg.n_subcarriers;
        for i in 1..=prop.n_blades {
            for mu in cells.clone() {
                let t = mode.time(cfg, m, mu);
                let (l1, l2) = blade_limits(mu, i, factors, prop, cfg, t);
                if l2 <= l1 {
                    continue;
                }
                let c = rotor.blade_phase(i, t).cos();
                let d_plus = factors.a_b * 0.5 * (l2 + l1) * c;
                let d_minus = factors.a_b * 0.5 * (l2 - l1) * c;
                let half_width = 0.5 * (l2 - l1);
                let mut acc = Complex64::new(0.0, 0.0);
                for (j, &n) in self.band.index.iter().enumerate() {
                    let k = self.band.wavenumber[j];
                    // γ_ni = 2 g_n
                    let amp = 2.0 * self.line_amplitude[j] * half_width * sinc(k * d_minus);
                    let phase = ActiveBand::fast_time_phase(n, mu, n_sub) + k * (d_plus - factors.r_o);
                    acc += d[n - 1] * Complex64::from_polar(amp, phase);
                }
                out[mu] += acc;
            }
        }
    }

    /// Adds the K-point discretized return of every blade to `out`.
    pub fn add_point_oracle(
        &self,
        points_per_blade: usize,
        cfg: &OfdmConfig,
        grid: &ModulationGrid,
        m: usize,
        mode: TimeMode,
        out: &mut [Complex64],
    ) {
        let rotor = self.rotor;
        let (prop, factors) = (&rotor.propeller, &rotor.factors);
        let d = grid.row(m);
        let n_sub = cfg.n_subcarriers;
        let dr = cfg.range_cell();
        let step = prop.blade_length / points_per_blade as f64;
        for i in 1..=prop.n_blades {
            for mu in rotor.cell_span(cfg) {
                let t = mode.time(cfg, m, mu);
                let c = rotor.blade_phase(i, t).cos();
                let upper = mu as f64 * dr;
                let lower = upper - dr;
                for q in 0..points_per_blade {
                    let l = (q as f64 + 0.5) * step;
                    let range = factors.r_o - factors.a_b * l * c;
                    if !(lower..upper).contains(&range) {
                        continue;
                    }
                    let mut acc = Complex64::new(0.0, 0.0);
                    for (j, &n) in self.band.index.iter().enumerate() {
                        let phase = ActiveBand::fast_time_phase(n, mu, n_sub) - self.band.wavenumber[j] * range;
                        acc += d[n - 1] * Complex64::from_polar(self.line_amplitude[j] * step, phase);
                    }
                    out[mu] += acc;
                }
            }
        }
    }

    pub fn cells(&self, cfg: &OfdmConfig) -> std::ops::Range<usize> {
        self.rotor.cell_span(cfg)
    }
}

/// Adds the return of a stationary point scatterer at bistatic range `range`
/// with per-subcarrier amplitudes `amp`.
pub(crate) fn add_static_point(
    band: &ActiveBand,
    amp: &[f64],
    range: f64,
    cfg: &OfdmConfig,
    grid: &ModulationGrid,
    m: usize,
    out: &mut [Complex64],
) {
    let Some(mu) = cfg.range_to_cell(range) else {
        return;
    };
    let d = grid.row(m);
    let mut acc = Complex64::new(0.0, 0.0);
    for (j, &n) in band.index.iter().enumerate() {
        let phase = ActiveBand::fast_time_phase(n, mu, cfg.n_subcarriers) - band.wavenumber[j] * range;
        acc += d[n - 1] * Complex64::from_polar(amp[j], phase);
    }
    out[mu] += acc;
}

/// Closed-form baseband echo of one rotor for symbol `m` (no noise).
pub fn closed_form_returns(
    rotor: &RotorView,
    cfg: &OfdmConfig,
    grid: &ModulationGrid,
    m: usize,
    mode: TimeMode,
    gamma0: f64,
) -> Result<EchoFrame, ScatterError> {
    let band = ActiveBand::new(cfg);
    let kernel = RotorKernel::new(rotor, &band, gamma0)?;
    let mut frame = EchoFrame::zeros(cfg, m);
    kernel.add_closed_form(cfg, grid, m, mode, kernel.cells(cfg), &mut frame.samples);
    Ok(frame)
}

/// Discretized-blade echo: `points_per_blade` point scatterers per blade at
/// the midpoints of equal segments, each weighted by its segment length.
pub fn point_oracle_returns(
    points_per_blade: usize,
    rotor: &RotorView,
    cfg: &OfdmConfig,
    grid: &ModulationGrid,
    m: usize,
    mode: TimeMode,
    gamma0: f64,
) -> Result<EchoFrame, ScatterError> {
    let band = ActiveBand::new(cfg);
    let kernel = RotorKernel::new(rotor, &band, gamma0)?;
    let mut frame = EchoFrame::zeros(cfg, m);
    kernel.add_point_oracle(points_per_blade.max(1), cfg, grid, m, mode, &mut frame.samples);
    Ok(frame)
}

/// Narrowband monostatic rotor return sampled at `times`.
///
/// `elevation` is the radar elevation above the rotation plane and
/// `r_o_mono` the one-way range to the hub. Blade `i` has phase
/// `ωt + φ_0 + 2π(i-1)/N_B`.
pub fn classic_cw_returns(
    prop: &Propeller,
    elevation: f64,
    r_o_mono: f64,
    f0: f64,
    times: &[f64],
) -> Result<Vec<Complex64>, ScatterError> {
    prop.validate()?;
    let len = prop.blade_length;
    let gamma = 2.0 * radar_amplitude(1.0, prop.rcs_density * len, r_o_mono, f0)? / len;
    let k0 = TAU * f0 / SPEED_OF_LIGHT;
    let ce = elevation.cos();
    Ok(times
        .iter()
        .map(|&t| {
            (1..=prop.n_blades)
                .map(|i| {
                    let proj = (prop.rotation_rate * t + prop.blade_offset(i)).cos() * ce;
                    let amp = gamma * 0.5 * len * sinc(k0 * len * proj);
                    Complex64::from_polar(amp, k0 * (-2.0 * r_o_mono + len * proj))
                })
                .sum()
        })
        .collect())
}
