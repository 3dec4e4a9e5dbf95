//! Slow-time processing: Doppler spectra, range-Doppler maps and the
//! signature metrics (impulse spacing, Doppler spread, Pearson correlation).

use std::f64::consts::TAU;

use num_complex::Complex64;
use rustfft::FftPlanner;
use thiserror::Error;

use crate::exec::Execution;
use crate::scatter::EchoFrame;

#[derive(Debug, Error, PartialEq)]
pub enum DspError {
    #[error("subsample factor must be at least 1")]
    BadSubsample,
    #[error("range bin {bin} outside 0..{len}")]
    RangeBinOutOfRange { bin: usize, len: usize },
    #[error("no frames selected")]
    NoFrames,
    #[error("selected frames are not evenly spaced by the subsample factor (gap at symbol {0})")]
    UnevenFrames(usize),
    #[error("frames have different lengths")]
    RaggedFrames,
    #[error("need at least 2 slow-time samples, got {0}")]
    TooShort(usize),
    #[error("only {found} spectral peaks above threshold, need at least 3")]
    TooFewPeaks { found: usize },
    #[error("wavelength must be positive, got {0} m")]
    BadWavelength(f64),
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("input has zero variance")]
    ZeroVariance,
}

/// Returns of one range bin across symbols.
#[derive(Debug, Clone, PartialEq)]
pub struct SlowTimeSignal {
    pub samples: Vec<Complex64>,
    /// Slow-time sampling rate, Hz.
    pub slow_time_rate: f64,
    pub range_bin: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Window {
    #[default]
    Rectangular,
    Hann,
}

impl Window {
    pub fn coefficients(self, len: usize) -> Vec<f64> {
        match self {
            Window::Rectangular => vec![1.0; len],
            Window::Hann => (0..len)
                .map(|k| 0.5 - 0.5 * (TAU * k as f64 / len as f64).cos())
                .collect(),
        }
    }
}

/// Centered two-sided magnitude spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct DopplerSpectrum {
    pub magnitude: Vec<f64>,
    /// Frequency of bin 0, Hz.
    pub freq_start: f64,
    /// Hz per bin.
    pub bin_width: f64,
}

impl DopplerSpectrum {
    pub fn len(&self) -> usize {
        self.magnitude.len()
    }

    pub fn is_empty(&self) -> bool {
        self.magnitude.is_empty()
    }

    pub fn freq(&self, bin: usize) -> f64 {
        self.freq_start + bin as f64 * self.bin_width
    }

    pub fn freq_axis(&self) -> Vec<f64> {
        (0..self.len()).map(|j| self.freq(j)).collect()
    }

    /// Index of the 0 Hz bin.
    pub fn dc_bin(&self) -> usize {
        (-self.freq_start / self.bin_width).round() as usize
    }
}

/// Stacked Doppler spectra, one row per fast-time range bin.
#[derive(Debug, Clone, PartialEq)]
pub struct RangeDopplerMap {
    /// Row-major `n_range × n_doppler` magnitudes.
    pub magnitude: Vec<f64>,
    pub n_range: usize,
    pub n_doppler: usize,
    /// Bistatic range spanned by one range bin, cT/N.
    pub range_cell: f64,
    pub freq_start: f64,
    pub bin_width: f64,
}

impl RangeDopplerMap {
    pub fn row(&self, range_bin: usize) -> &[f64] {
        &self.magnitude[range_bin * self.n_doppler..(range_bin + 1) * self.n_doppler]
    }

    /// Monostatic-equivalent range resolution c/(2B), half the bistatic cell.
    pub fn range_resolution(&self) -> f64 {
        self.range_cell / 2.0
    }

    /// Bistatic range at the center of bin `mu`.
    pub fn bin_range(&self, mu: usize) -> f64 {
        (mu as f64 - 0.5) * self.range_cell
    }

    pub fn row_spectrum(&self, range_bin: usize) -> DopplerSpectrum {
        self.stripe_spectrum(range_bin..range_bin + 1)
    }

    /// Magnitudes summed over a band of range bins.
    pub fn stripe_spectrum(&self, bins: std::ops::Range<usize>) -> DopplerSpectrum {
        let mut magnitude = vec![0.0; self.n_doppler];
        for mu in bins {
            for (acc, v) in magnitude.iter_mut().zip(self.row(mu)) {
                *acc += v;
            }
        }
        DopplerSpectrum {
            magnitude,
            freq_start: self.freq_start,
            bin_width: self.bin_width,
        }
    }
}

/// Frames whose symbol index is a multiple of `subsample`, checked for even spacing.
fn select_frames(frames: &[EchoFrame], subsample: usize) -> Result<Vec<&EchoFrame>, DspError> {
    if subsample == 0 {
        return Err(DspError::BadSubsample);
    }
    let picked: Vec<&EchoFrame> = frames.iter().filter(|f| f.symbol_index % subsample == 0).collect();
    if picked.is_empty() {
        return Err(DspError::NoFrames);
    }
    for pair in picked.windows(2) {
        if pair[1].symbol_index != pair[0].symbol_index + subsample {
            return Err(DspError::UnevenFrames(pair[1].symbol_index));
        }
    }
    Ok(picked)
}

/// Sample `range_bin` of every `subsample`-th symbol.
///
/// Frames are selected by symbol index, so `frames` may already be thinned
/// to the symbols of interest.
pub fn slow_time_extract(
    frames: &[EchoFrame],
    range_bin: usize,
    subsample: usize,
    symbol_duration: f64,
) -> Result<SlowTimeSignal, DspError> {
    let picked = select_frames(frames, subsample)?;
    let len = picked[0].samples.len();
    if range_bin >= len {
        return Err(DspError::RangeBinOutOfRange { bin: range_bin, len });
    }
    Ok(SlowTimeSignal {
        samples: picked.iter().map(|f| f.samples[range_bin]).collect(),
        slow_time_rate: 1.0 / (symbol_duration * subsample as f64),
        range_bin,
    })
}

fn centered_spectrum(samples: &[Complex64], window: &[f64], fft: &dyn rustfft::Fft<f64>) -> Vec<f64> {
    let len = samples.len();
    let mut buf: Vec<Complex64> = samples.iter().zip(window).map(|(s, w)| s * w).collect();
    fft.process(&mut buf);
    let half = len / 2;
    (0..len).map(|j| buf[(j + len - half) % len].norm()).collect()
}

/// Centered DFT magnitude of the windowed slow-time signal.
pub fn doppler_spectrum(sig: &SlowTimeSignal, window: Window) -> Result<DopplerSpectrum, DspError> {
    let len = sig.samples.len();
    if len < 2 {
        return Err(DspError::TooShort(len));
    }
    let fft = FftPlanner::new().plan_fft_forward(len);
    let bin_width = sig.slow_time_rate / len as f64;
    Ok(DopplerSpectrum {
        magnitude: centered_spectrum(&sig.samples, &window.coefficients(len), fft.as_ref()),
        freq_start: -((len / 2) as f64) * bin_width,
        bin_width,
    })
}

/// Doppler spectrum of every range bin.
pub fn range_doppler_map(
    frames: &[EchoFrame],
    subsample: usize,
    symbol_duration: f64,
    window: Window,
    exec: Execution,
) -> Result<RangeDopplerMap, DspError> {
    let picked = select_frames(frames, subsample)?;
    let n_range = picked[0].samples.len();
    if picked.iter().any(|f| f.samples.len() != n_range) {
        return Err(DspError::RaggedFrames);
    }
    let n_doppler = picked.len();
    if n_doppler < 2 {
        return Err(DspError::TooShort(n_doppler));
    }
    let fft = FftPlanner::new().plan_fft_forward(n_doppler);
    let coeffs = window.coefficients(n_doppler);
    let rows = exec.map_range(n_range, |mu| {
        let slow: Vec<Complex64> = picked.iter().map(|f| f.samples[mu]).collect();
        centered_spectrum(&slow, &coeffs, fft.as_ref())
    });
    let bin_width = 1.0 / (symbol_duration * subsample as f64 * n_doppler as f64);
    Ok(RangeDopplerMap {
        magnitude: rows.into_iter().flatten().collect(),
        n_range,
        n_doppler,
        range_cell: picked[0].range_cell,
        freq_start: -((n_doppler / 2) as f64) * bin_width,
        bin_width,
    })
}

/// Bistatic Doppler f_D = 2v·cos(β/2)·cos(δ)/λ.
pub fn predict_bistatic_doppler(v: f64, beta: f64, delta: f64, wavelength: f64) -> Result<f64, DspError> {
    if !(wavelength > 0.0) {
        return Err(DspError::BadWavelength(wavelength));
    }
    Ok(2.0 * v * (beta / 2.0).cos() * delta.cos() / wavelength)
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        0.0
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Level below which bins are treated as round-off, relative to the maximum.
pub const NUMERICAL_FLOOR_DB: f64 = -200.0;

fn numerical_floor(mag: &[f64]) -> f64 {
    mag.iter().copied().fold(0.0, f64::max) * 10f64.powf(NUMERICAL_FLOOR_DB / 20.0)
}

/// Spectral lines: local maxima more than `threshold_db` above the median
/// magnitude, at least 2 bins apart. Frequencies are refined by parabolic
/// interpolation and returned in ascending order.
pub fn find_peaks(spec: &DopplerSpectrum, threshold_db: f64) -> Vec<f64> {
    let mag = &spec.magnitude;
    if mag.len() < 3 {
        return Vec::new();
    }
    let level = (median(mag) * 10f64.powf(threshold_db / 20.0)).max(numerical_floor(mag));
    let mut candidates: Vec<usize> = (1..mag.len() - 1)
        .filter(|&j| mag[j] > level && mag[j] > mag[j - 1] && mag[j] >= mag[j + 1])
        .collect();
    candidates.sort_by(|&a, &b| mag[b].total_cmp(&mag[a]));
    let mut kept: Vec<usize> = Vec::new();
    for j in candidates {
        if kept.iter().all(|&k| k.abs_diff(j) >= 2) {
            kept.push(j);
        }
    }
    kept.sort_unstable();
    kept.into_iter()
        .map(|j| {
            let (a, b, c) = (mag[j - 1], mag[j], mag[j + 1]);
            let curvature = a - 2.0 * b + c;
            let offset = if curvature.abs() > 0.0 {
                (0.5 * (a - c) / curvature).clamp(-0.5, 0.5)
            } else {
                0.0
            };
            spec.freq(j) + offset * spec.bin_width
        })
        .collect()
}

/// Median distance between adjacent spectral lines, Hz.
pub fn impulse_spacing(spec: &DopplerSpectrum, peak_threshold_db: f64) -> Result<f64, DspError> {
    let peaks = find_peaks(spec, peak_threshold_db);
    if peaks.len() < 3 {
        return Err(DspError::TooFewPeaks { found: peaks.len() });
    }
    let gaps: Vec<f64> = peaks.windows(2).map(|w| w[1] - w[0]).collect();
    Ok(median(&gaps))
}

/// Bins on each side of 0 Hz attributed to the static return's main lobe.
pub const DC_GUARD_BINS: usize = 2;

/// Parameters of the Doppler-spread measurement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpreadOptions {
    /// Threshold above the median magnitude (the noise floor), dB.
    pub floor_margin_db: f64,
    /// Scanning outward from 0 Hz stops after this many consecutive bins
    /// below threshold.
    pub max_gap_bins: usize,
    /// The floor is never taken lower than this far below the strongest
    /// bin outside the 0 Hz line, dB. Noise-free spectra have no floor of
    /// their own.
    pub dynamic_range_db: f64,
}

impl Default for SpreadOptions {
    fn default() -> Self {
        Self {
            floor_margin_db: 6.0,
            max_gap_bins: 16,
            dynamic_range_db: 30.0,
        }
    }
}

/// Outermost frequencies (low, high) of the support around 0 Hz.
pub fn support_edges(spec: &DopplerSpectrum, opts: SpreadOptions) -> (f64, f64) {
    let mag = &spec.magnitude;
    let dc = spec.dc_bin().min(mag.len().saturating_sub(1));
    // strongest line away from the static (0 Hz) return
    let peak = mag
        .iter()
        .enumerate()
        .filter(|(j, _)| j.abs_diff(dc) > DC_GUARD_BINS)
        .map(|(_, &v)| v)
        .fold(0.0, f64::max);
    let floor = median(mag)
        .max(peak * 10f64.powf(-opts.dynamic_range_db / 20.0))
        .max(numerical_floor(mag));
    let threshold = floor * 10f64.powf(opts.floor_margin_db / 20.0);

    let scan = |bins: &mut dyn Iterator<Item = usize>| {
        let mut edge = dc;
        let mut gap = 0;
        for j in bins {
            if mag[j] > threshold {
                edge = j;
                gap = 0;
            } else {
                gap += 1;
                if gap > opts.max_gap_bins {
                    break;
                }
            }
        }
        edge
    };
    let hi = scan(&mut (dc + 1..mag.len()));
    let lo = scan(&mut (0..dc).rev());
    (spec.freq(lo), spec.freq(hi))
}

/// Width of the spectral support around 0 Hz, Hz (a lone DC line is one bin wide).
pub fn doppler_spread(spec: &DopplerSpectrum, floor_margin_db: f64) -> f64 {
    doppler_spread_with(
        spec,
        SpreadOptions {
            floor_margin_db,
            ..SpreadOptions::default()
        },
    )
}

pub fn doppler_spread_with(spec: &DopplerSpectrum, opts: SpreadOptions) -> f64 {
    let (lo, hi) = support_edges(spec, opts);
    hi - lo + spec.bin_width
}

/// Pearson correlation coefficient of two sequences.
pub fn pearson(a: &[f64], b: &[f64]) -> Result<f64, DspError> {
    if a.len() != b.len() {
        return Err(DspError::LengthMismatch(a.len(), b.len()));
    }
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let (mut cov, mut va, mut vb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        cov += dx * dy;
        va += dx * dx;
        vb += dy * dy;
    }
    if va <= 0.0 || vb <= 0.0 {
        return Err(DspError::ZeroVariance);
    }
    Ok((cov / (va.sqrt() * vb.sqrt())).clamp(-1.0, 1.0))
}

/// Pearson correlation of two spectra's magnitudes.
pub fn pearson_correlation(a: &DopplerSpectrum, b: &DopplerSpectrum) -> Result<f64, DspError> {
    pearson(&a.magnitude, &b.magnitude)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn frames_from(slow: &[Complex64], stride: usize) -> Vec<EchoFrame> {
        slow.iter()
            .enumerate()
            .map(|(k, &s)| EchoFrame {
                samples: vec![Complex64::new(0.0, 0.0), s],
                symbol_index: k * stride,
                range_cell: 1.0,
            })
            .collect()
    }

    fn tone(freq: f64, rate: f64, len: usize) -> SlowTimeSignal {
        SlowTimeSignal {
            samples: (0..len)
                .map(|k| Complex64::from_polar(1.0, TAU * freq * k as f64 / rate))
                .collect(),
            slow_time_rate: rate,
            range_bin: 0,
        }
    }

    #[test]
    fn extract_every_symbol() {
        let slow: Vec<Complex64> = (0..10).map(|k| Complex64::new(k as f64, 0.0)).collect();
        let sig = slow_time_extract(&frames_from(&slow, 1), 1, 1, 8e-6).unwrap();
        assert_eq!(sig.samples, slow);
        assert_relative_eq!(sig.slow_time_rate, 125e3);
    }

    #[test]
    fn subsample_by_eight() {
        let frames: Vec<EchoFrame> = (0..16384)
            .map(|m| EchoFrame {
                samples: vec![Complex64::new(m as f64, 0.0)],
                symbol_index: m,
                range_cell: 1.0,
            })
            .collect();
        let sig = slow_time_extract(&frames, 0, 8, 8e-6).unwrap();
        assert_eq!(sig.samples.len(), 2048);
        assert_eq!(sig.samples[3].re, 24.0);
        let full = slow_time_extract(&frames, 0, 1, 8e-6).unwrap();
        assert_relative_eq!(full.slow_time_rate / sig.slow_time_rate, 8.0);
        // pre-thinned frames give the same signal
        let thinned: Vec<EchoFrame> = frames.iter().step_by(8).cloned().collect();
        assert_eq!(slow_time_extract(&thinned, 0, 8, 8e-6).unwrap(), sig);
    }

    #[test]
    fn extract_errors() {
        let frames = frames_from(&[Complex64::new(1.0, 0.0); 4], 1);
        assert_eq!(
            slow_time_extract(&frames, 2, 1, 1.0),
            Err(DspError::RangeBinOutOfRange { bin: 2, len: 2 })
        );
        assert_eq!(slow_time_extract(&frames, 0, 0, 1.0), Err(DspError::BadSubsample));
        let gappy = frames_from(&[Complex64::new(1.0, 0.0); 4], 2);
        assert_eq!(slow_time_extract(&gappy, 0, 1, 1.0), Err(DspError::UnevenFrames(2)));
    }

    #[test]
    fn tone_lands_in_its_bin() {
        let rate = 15625.0;
        let bin = rate / 2048.0;
        let f = 37.0 * bin;
        let spec = doppler_spectrum(&tone(f, rate, 2048), Window::Rectangular).unwrap();
        let peak = (0..spec.len())
            .max_by(|&a, &b| spec.magnitude[a].total_cmp(&spec.magnitude[b]))
            .unwrap();
        assert_relative_eq!(spec.freq(peak), f, epsilon = 1e-9);
        assert_relative_eq!(spec.magnitude[peak], 2048.0, max_relative = 1e-9);
        assert_relative_eq!(spec.freq(0), -rate / 2.0);
        assert_eq!(spec.freq(spec.dc_bin()), 0.0);
        // negative frequency
        let spec = doppler_spectrum(&tone(-f, rate, 2048), Window::Hann).unwrap();
        let peak = (0..spec.len())
            .max_by(|&a, &b| spec.magnitude[a].total_cmp(&spec.magnitude[b]))
            .unwrap();
        assert_relative_eq!(spec.freq(peak), -f, epsilon = 1e-9);
    }

    #[test]
    fn spectrum_parseval() {
        let sig = SlowTimeSignal {
            samples: (0..300)
                .map(|k| Complex64::new((k as f64 * 0.37).sin(), (k as f64 * 0.11).cos() * 0.5))
                .collect(),
            slow_time_rate: 1000.0,
            range_bin: 0,
        };
        for window in [Window::Rectangular, Window::Hann] {
            let spec = doppler_spectrum(&sig, window).unwrap();
            let w = window.coefficients(300);
            let energy: f64 = sig.samples.iter().zip(&w).map(|(s, w)| (s * w).norm_sqr()).sum();
            let spec_energy: f64 = spec.magnitude.iter().map(|m| m * m).sum();
            assert_relative_eq!(spec_energy, energy * 300.0, max_relative = 1e-10);
        }
    }

    #[test]
    fn odd_length_axis_is_centered() {
        let spec = doppler_spectrum(&tone(0.0, 9.0, 9), Window::Rectangular).unwrap();
        assert_relative_eq!(spec.freq(0), -4.0);
        assert_relative_eq!(spec.freq(8), 4.0);
        assert_eq!(spec.dc_bin(), 4);
        assert_relative_eq!(spec.magnitude[4], 9.0, max_relative = 1e-12);
    }

    #[test]
    fn short_signal_is_rejected() {
        assert_eq!(
            doppler_spectrum(&tone(1.0, 10.0, 1), Window::Rectangular),
            Err(DspError::TooShort(1))
        );
    }

    fn line_spectrum(spacing: f64, n_lines: i32, rate: f64, len: usize, window: Window) -> DopplerSpectrum {
        let samples = (0..len)
            .map(|k| {
                (-n_lines..=n_lines)
                    .map(|q| {
                        let amp = 1.0 / (1.0 + q.abs() as f64);
                        Complex64::from_polar(amp, TAU * spacing * q as f64 * k as f64 / rate)
                    })
                    .sum()
            })
            .collect();
        let sig = SlowTimeSignal {
            samples,
            slow_time_rate: rate,
            range_bin: 0,
        };
        doppler_spectrum(&sig, window).unwrap()
    }

    #[test]
    fn spacing_of_synthetic_lines() {
        let spec = line_spectrum(40.0, 6, 15625.0, 2048, Window::Rectangular);
        let spacing = impulse_spacing(&spec, 10.0).unwrap();
        assert!((spacing - 40.0).abs() <= spec.bin_width, "spacing {spacing}");
    }

    #[test]
    fn too_few_peaks() {
        let spec = doppler_spectrum(&tone(100.0, 1000.0, 256), Window::Rectangular).unwrap();
        assert!(matches!(
            impulse_spacing(&spec, 10.0),
            Err(DspError::TooFewPeaks { found: 1 })
        ));
    }

    #[test]
    fn spread_of_lone_dc_line_is_one_bin() {
        let spec = doppler_spectrum(&tone(0.0, 1000.0, 256), Window::Rectangular).unwrap();
        assert_relative_eq!(doppler_spread(&spec, 6.0), spec.bin_width);
    }

    #[test]
    fn spread_covers_line_comb() {
        // rectangular-window leakage of off-bin lines would dominate the floor
        let spec = line_spectrum(40.0, 6, 15625.0, 2048, Window::Hann);
        let (lo, hi) = support_edges(&spec, SpreadOptions::default());
        assert!((hi - 240.0).abs() < 3.0 * spec.bin_width, "hi {hi}");
        assert!((lo + 240.0).abs() < 3.0 * spec.bin_width, "lo {lo}");
    }

    #[test]
    fn bistatic_doppler_prediction() {
        let v = TAU * 25.0 * 0.1655;
        let lambda = crate::SPEED_OF_LIGHT / 3.7e9;
        let fd = predict_bistatic_doppler(v, 60f64.to_radians(), 0.0, lambda).unwrap();
        assert!((fd - 555.4).abs() / 555.4 < 1e-3, "fd {fd}");
        assert!(
            predict_bistatic_doppler(v, std::f64::consts::PI, 0.0, lambda)
                .unwrap()
                .abs()
                < 1e-12
        );
        assert!(
            predict_bistatic_doppler(v, 0.3, std::f64::consts::FRAC_PI_2, lambda)
                .unwrap()
                .abs()
                < 1e-12
        );
        assert_eq!(
            predict_bistatic_doppler(v, 0.0, 0.0, 0.0),
            Err(DspError::BadWavelength(0.0))
        );
    }

    #[test]
    fn pearson_identities() {
        let a = DopplerSpectrum {
            magnitude: vec![1.0, 3.0, 2.0, 7.0, 0.5],
            freq_start: 0.0,
            bin_width: 1.0,
        };
        assert_relative_eq!(pearson_correlation(&a, &a).unwrap(), 1.0, epsilon = 1e-12);
        let flipped = DopplerSpectrum {
            magnitude: a.magnitude.iter().map(|x| 10.0 - x).collect(),
            ..a.clone()
        };
        assert_relative_eq!(pearson_correlation(&a, &flipped).unwrap(), -1.0, epsilon = 1e-12);
        assert_eq!(pearson(&[1.0, 1.0], &[1.0, 2.0]), Err(DspError::ZeroVariance));
        assert_eq!(pearson(&[1.0], &[1.0, 2.0]), Err(DspError::LengthMismatch(1, 2)));
    }

    #[test]
    fn map_rows_are_per_bin_spectra() {
        let slow: Vec<Complex64> = (0..64).map(|k| Complex64::from_polar(1.0, 0.3 * k as f64)).collect();
        let frames = frames_from(&slow, 1);
        let map = range_doppler_map(&frames, 1, 1e-3, Window::Rectangular, Execution::Parallel).unwrap();
        assert_eq!((map.n_range, map.n_doppler), (2, 64));
        let spec = doppler_spectrum(&slow_time_extract(&frames, 1, 1, 1e-3).unwrap(), Window::Rectangular).unwrap();
        assert_eq!(map.row(1), spec.magnitude.as_slice());
        assert!(map.row(0).iter().all(|&v| v == 0.0));
        assert_relative_eq!(map.bin_width, spec.bin_width);
        assert_relative_eq!(map.range_resolution(), 0.5);
    }
}
