//! OFDM transmit model: subcarrier grid, modulation symbols and the
//! Newman-phase sounding sequence.
//!
//! Subcarriers are numbered `n = 1..=N` and spaced by `1/T`. By default the
//! carrier frequency `f0` is the center of the grid,
//! `f_n = f0 + (n - (N+1)/2) / T`; [`CarrierReference::LowerEdge`] selects
//! `f_n = f0 + n / T` instead.
//! Fast-time sample `μ` of symbol `m` is taken at `t = (m + μ/N) T`; every
//! module obtains time through [`OfdmConfig::sample_time`].

use std::f64::consts::PI;
use std::ops::RangeInclusive;

use num_complex::Complex64;
use rustfft::FftPlanner;
use thiserror::Error;

use crate::SPEED_OF_LIGHT;

#[derive(Debug, Error, PartialEq)]
pub enum WaveformError {
    #[error("carrier frequency must be positive, got {0} Hz")]
    BadCarrier(f64),
    #[error("symbol duration must be positive, got {0} s")]
    BadSymbolDuration(f64),
    #[error("number of subcarriers must be at least 1")]
    NoSubcarriers,
    #[error("number of symbols must be at least 1")]
    NoSymbols,
    #[error("active band is empty")]
    EmptyActiveBand,
    #[error("active band {start}..={end} exceeds 1..={n}")]
    ActiveBandOutOfRange { start: usize, end: usize, n: usize },
    #[error("modulation grid has {got} subcarriers, configuration has {expected}")]
    GridSubcarrierMismatch { got: usize, expected: usize },
    #[error("modulation grid has {got} symbols, configuration has {expected}")]
    GridSymbolMismatch { got: usize, expected: usize },
    #[error("modulation grid rows must all have the same length")]
    RaggedGrid,
}

/// Where the carrier frequency sits in the subcarrier grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CarrierReference {
    /// `f0` is the center of the N-subcarrier grid.
    #[default]
    BandCenter,
    /// `f_n = f0 + n/T`.
    LowerEdge,
}

/// OFDM numerology.
#[derive(Debug, Clone, PartialEq)]
pub struct OfdmConfig {
    /// Carrier frequency f0, Hz.
    pub f0: f64,
    /// Total number of subcarriers N.
    pub n_subcarriers: usize,
    /// First subcarrier carrying energy (1-based).
    pub active_start: usize,
    /// Number of subcarriers carrying energy.
    pub active_len: usize,
    /// Symbol duration T, s.
    pub symbol_duration: f64,
    /// Number of symbols M in slow time.
    pub n_symbols: usize,
    pub carrier_reference: CarrierReference,
}

impl OfdmConfig {
    /// Configuration with the active band centered in `1..=n_subcarriers`.
    pub fn centered(
        f0: f64,
        n_subcarriers: usize,
        active_len: usize,
        symbol_duration: f64,
        n_symbols: usize,
    ) -> Result<Self, WaveformError> {
        let cfg = Self {
            f0,
            n_subcarriers,
            active_start: n_subcarriers.saturating_sub(active_len) / 2 + 1,
            active_len,
            symbol_duration,
            n_symbols,
            carrier_reference: CarrierReference::default(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), WaveformError> {
        if !(self.f0.is_finite() && self.f0 > 0.0) {
            return Err(WaveformError::BadCarrier(self.f0));
        }
        if !(self.symbol_duration.is_finite() && self.symbol_duration > 0.0) {
            return Err(WaveformError::BadSymbolDuration(self.symbol_duration));
        }
        if self.n_subcarriers == 0 {
            return Err(WaveformError::NoSubcarriers);
        }
        if self.n_symbols == 0 {
            return Err(WaveformError::NoSymbols);
        }
        if self.active_len == 0 {
            return Err(WaveformError::EmptyActiveBand);
        }
        let end = self.active_start + self.active_len - 1;
        if self.active_start < 1 || end > self.n_subcarriers {
            return Err(WaveformError::ActiveBandOutOfRange {
                start: self.active_start,
                end,
                n: self.n_subcarriers,
            });
        }
        Ok(())
    }

    /// Active subcarrier indices (1-based, inclusive).
    pub fn active_band(&self) -> RangeInclusive<usize> {
        self.active_start..=self.active_start + self.active_len - 1
    }

    pub fn subcarrier_spacing(&self) -> f64 {
        1.0 / self.symbol_duration
    }

    /// Frequency of subcarrier `n` (1-based).
    pub fn subcarrier_frequency(&self, n: usize) -> f64 {
        let offset = match self.carrier_reference {
            CarrierReference::BandCenter => n as f64 - 0.5 * (self.n_subcarriers as f64 + 1.0),
            CarrierReference::LowerEdge => n as f64,
        };
        self.f0 + offset / self.symbol_duration
    }

    /// Sampled bandwidth N/T.
    pub fn bandwidth(&self) -> f64 {
        self.n_subcarriers as f64 / self.symbol_duration
    }

    /// Bandwidth actually carrying energy, K/T.
    pub fn occupied_bandwidth(&self) -> f64 {
        self.active_len as f64 / self.symbol_duration
    }

    /// Time of fast-time sample `mu` in symbol `m`.
    pub fn sample_time(&self, m: usize, mu: usize) -> f64 {
        (m as f64 + mu as f64 / self.n_subcarriers as f64) * self.symbol_duration
    }

    /// Bistatic range spanned by one fast-time sample, cT/N.
    pub fn range_cell(&self) -> f64 {
        SPEED_OF_LIGHT * self.symbol_duration / self.n_subcarriers as f64
    }

    /// Monostatic-equivalent range resolution c/(2B).
    pub fn range_resolution(&self) -> f64 {
        SPEED_OF_LIGHT / (2.0 * self.bandwidth())
    }

    /// Fast-time cell `mu` holds bistatic ranges in `[(mu-1)·cT/N, mu·cT/N)`.
    /// Returns the cell containing `range`, or `None` when it falls outside
    /// the frame.
    pub fn range_to_cell(&self, range: f64) -> Option<usize> {
        let cell = (range / self.range_cell()).floor() + 1.0;
        (cell >= 0.0 && cell < self.n_subcarriers as f64).then_some(cell as usize)
    }
}

/// Complex modulation symbols D(n, m).
#[derive(Debug, Clone, PartialEq)]
pub enum ModulationGrid {
    /// The same sounding sequence in every symbol; entry `n-1` holds D(n, ·).
    Constant(Vec<Complex64>),
    /// One row of N symbols per OFDM symbol.
    PerSymbol { n_subcarriers: usize, rows: Vec<Complex64> },
}

impl ModulationGrid {
    /// Wraps externally supplied symbols, one row per OFDM symbol.
    pub fn from_rows(rows: Vec<Vec<Complex64>>) -> Result<Self, WaveformError> {
        let n = rows.first().map(Vec::len).unwrap_or(0);
        if rows.iter().any(|r| r.len() != n) {
            return Err(WaveformError::RaggedGrid);
        }
        if rows.len() == 1 {
            return Ok(Self::Constant(rows.into_iter().next().unwrap()));
        }
        Ok(Self::PerSymbol {
            n_subcarriers: n,
            rows: rows.into_iter().flatten().collect(),
        })
    }

    pub fn n_subcarriers(&self) -> usize {
        match self {
            Self::Constant(d) => d.len(),
            Self::PerSymbol { n_subcarriers, .. } => *n_subcarriers,
        }
    }

    /// Number of stored rows (1 for a constant grid).
    pub fn n_rows(&self) -> usize {
        match self {
            Self::Constant(_) => 1,
            Self::PerSymbol { n_subcarriers, rows } => rows.len() / n_subcarriers.max(&1),
        }
    }

    /// Symbols of OFDM symbol `m`, indexed by `n - 1`.
    pub fn row(&self, m: usize) -> &[Complex64] {
        match self {
            Self::Constant(d) => d,
            Self::PerSymbol { n_subcarriers, rows } => &rows[m * n_subcarriers..(m + 1) * n_subcarriers],
        }
    }

    /// D(n, m) with 1-based `n`.
    pub fn d(&self, n: usize, m: usize) -> Complex64 {
        self.row(m)[n - 1]
    }

    pub fn check_against(&self, cfg: &OfdmConfig) -> Result<(), WaveformError> {
        if self.n_subcarriers() != cfg.n_subcarriers {
            return Err(WaveformError::GridSubcarrierMismatch {
                got: self.n_subcarriers(),
                expected: cfg.n_subcarriers,
            });
        }
        if let Self::PerSymbol { .. } = self {
            if self.n_rows() != cfg.n_symbols {
                return Err(WaveformError::GridSymbolMismatch {
                    got: self.n_rows(),
                    expected: cfg.n_symbols,
                });
            }
        }
        Ok(())
    }
}

/// Newman multisine: unit magnitude on the K active subcarriers with phase
/// π(k-1)²/K on the k-th, zero elsewhere, repeated in every symbol.
pub fn newman_grid(cfg: &OfdmConfig) -> Result<ModulationGrid, WaveformError> {
    cfg.validate()?;
    let k_total = cfg.active_len as f64;
    let mut d = vec![Complex64::new(0.0, 0.0); cfg.n_subcarriers];
    for (k, n) in cfg.active_band().enumerate() {
        let k = k as f64;
        d[n - 1] = Complex64::from_polar(1.0, PI * k * k / k_total);
    }
    Ok(ModulationGrid::Constant(d))
}

/// Baseband samples x(μ, m) = Σ_n D(n, m) exp(j2πnμ/N), carrier omitted.
pub fn synthesize_symbol(cfg: &OfdmConfig, grid: &ModulationGrid, m: usize) -> Vec<Complex64> {
    let n = cfg.n_subcarriers;
    // exp(j2πnμ/N) is periodic in n with period N: subcarrier N lands in bin 0
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    for (idx, d) in grid.row(m).iter().enumerate() {
        buf[(idx + 1) % n] = *d;
    }
    FftPlanner::new().plan_fft_inverse(n).process(&mut buf);
    buf
}

/// Peak magnitude over RMS magnitude.
pub fn crest_factor(samples: &[Complex64]) -> f64 {
    let peak = samples.iter().map(|s| s.norm()).fold(0.0, f64::max);
    let rms = (samples.iter().map(|s| s.norm_sqr()).sum::<f64>() / samples.len() as f64).sqrt();
    peak / rms
}
