//! Payload files.
//!
//! Binary layout, all fields little-endian:
//!
//! | offset | size | field                                   |
//! |--------|------|-----------------------------------------|
//! | 0      | 4    | magic `MDSG`                            |
//! | 4      | 2    | version (u16, currently 1)              |
//! | 6      | 1    | dtype: 0 real f32, 1 complex f32 pair   |
//! | 7      | 1    | kind: 0 spectrum, 1 map, 2 frames, 3 modulation grid |
//! | 8      | 4    | rows (u32)                              |
//! | 12     | 4    | cols (u32)                              |
//! | 16     | 8    | row axis start (f64)                    |
//! | 24     | 8    | row axis step (f64)                     |
//! | 32     | 8    | column axis start (f64)                 |
//! | 40     | 8    | column axis step (f64)                  |
//! | 48     |      | row-major payload                       |
//!
//! Complex values are stored as (re, im) pairs. Axes per kind:
//!
//! * spectrum: one row; columns are Doppler frequency, Hz.
//! * map: rows are bistatic range at the bin center, m; columns Doppler, Hz.
//! * frames: rows are symbol indices; columns are bistatic range, m.
//! * modulation grid: rows are symbol indices (a single row means the same
//!   symbols repeat); columns are 1-based subcarrier indices.
//!
//! CSV files carry a header line and one line per value, axis columns first
//! (`freq_hz,magnitude` for spectra; `range_m,freq_hz,magnitude` for maps;
//! `symbol,range_m,re,im` for frames; `symbol,subcarrier,re,im` for grids).
//! Axis values are printed in shortest round-trip decimal form and payload
//! values in shortest round-trip scientific form.

use std::io::{Read, Write};

use num_complex::{Complex32, Complex64};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dsp::{DopplerSpectrum, RangeDopplerMap};
use crate::scatter::EchoFrame;
use crate::waveform::ModulationGrid;

pub const MAGIC: [u8; 4] = *b"MDSG";
pub const VERSION: u16 = 1;
pub const HEADER_LEN: usize = 48;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("not a payload file (bad magic)")]
    BadMagic,
    #[error("unsupported format version {0}")]
    UnsupportedVersion(u16),
    #[error("unknown dtype code {0}")]
    BadDtype(u8),
    #[error("unknown payload kind code {0}")]
    BadKind(u8),
    #[error("payload holds {got} bytes, header promises {expected}")]
    Truncated { expected: usize, got: usize },
    #[error("expected a {expected:?} payload, found {found:?}")]
    KindMismatch { expected: Kind, found: Kind },
    #[error("{0}")]
    Shape(String),
    #[error("CSV line {line}: {message}")]
    Csv { line: usize, message: String },
}

/// Output encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Binary,
    Csv,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Binary => "bin",
            Format::Csv => "csv",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Spectrum = 0,
    Map = 1,
    Frames = 2,
    Grid = 3,
}

impl Kind {
    fn from_code(code: u8) -> Result<Self, FormatError> {
        Ok(match code {
            0 => Kind::Spectrum,
            1 => Kind::Map,
            2 => Kind::Frames,
            3 => Kind::Grid,
            other => return Err(FormatError::BadKind(other)),
        })
    }
}

/// Uniformly sampled axis: value of index `i` is `start + i·step`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    pub start: f64,
    pub step: f64,
}

impl Axis {
    pub fn at(&self, i: usize) -> f64 {
        self.start + i as f64 * self.step
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Data {
    Real(Vec<f32>),
    Complex(Vec<Complex32>),
}

/// A two-dimensional payload with axis metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    pub kind: Kind,
    pub rows: usize,
    pub cols: usize,
    pub row_axis: Axis,
    pub col_axis: Axis,
    pub data: Data,
}

const UNIT: Axis = Axis { start: 0.0, step: 1.0 };

impl Matrix {
    pub fn from_spectrum(spec: &DopplerSpectrum) -> Self {
        Self {
            kind: Kind::Spectrum,
            rows: 1,
            cols: spec.len(),
            row_axis: UNIT,
            col_axis: Axis {
                start: spec.freq_start,
                step: spec.bin_width,
            },
            data: Data::Real(spec.magnitude.iter().map(|&v| v as f32).collect()),
        }
    }

    pub fn from_map(map: &RangeDopplerMap) -> Self {
        Self {
            kind: Kind::Map,
            rows: map.n_range,
            cols: map.n_doppler,
            row_axis: Axis {
                start: map.bin_range(0),
                step: map.range_cell,
            },
            col_axis: Axis {
                start: map.freq_start,
                step: map.bin_width,
            },
            data: Data::Real(map.magnitude.iter().map(|&v| v as f32).collect()),
        }
    }

    /// Frames must be evenly spaced in symbol index and of equal length.
    pub fn from_frames(frames: &[EchoFrame]) -> Result<Self, FormatError> {
        let first = frames.first().ok_or_else(|| FormatError::Shape("no frames".into()))?;
        let cols = first.samples.len();
        let stride = frames
            .get(1)
            .map_or(1, |f| f.symbol_index.wrapping_sub(first.symbol_index));
        for (k, f) in frames.iter().enumerate() {
            if f.samples.len() != cols || f.symbol_index != first.symbol_index + k * stride {
                return Err(FormatError::Shape(format!(
                    "frame {k} (symbol {}) breaks the even symbol spacing or length",
                    f.symbol_index
                )));
            }
        }
        Ok(Self {
            kind: Kind::Frames,
            rows: frames.len(),
            cols,
            row_axis: Axis {
                start: first.symbol_index as f64,
                step: stride as f64,
            },
            col_axis: Axis {
                start: -0.5 * first.range_cell,
                step: first.range_cell,
            },
            data: Data::Complex(
                frames
                    .iter()
                    .flat_map(|f| f.samples.iter().map(|s| Complex32::new(s.re as f32, s.im as f32)))
                    .collect(),
            ),
        })
    }

    pub fn from_grid(grid: &ModulationGrid) -> Self {
        let rows = grid.n_rows();
        Self {
            kind: Kind::Grid,
            rows,
            cols: grid.n_subcarriers(),
            row_axis: UNIT,
            col_axis: Axis { start: 1.0, step: 1.0 },
            data: Data::Complex(
                (0..rows)
                    .flat_map(|m| grid.row(m).iter().map(|d| Complex32::new(d.re as f32, d.im as f32)))
                    .collect(),
            ),
        }
    }

    fn expect(&self, kind: Kind) -> Result<(), FormatError> {
        if self.kind == kind {
            Ok(())
        } else {
            Err(FormatError::KindMismatch {
                expected: kind,
                found: self.kind,
            })
        }
    }

    fn real(&self) -> Result<&[f32], FormatError> {
        match &self.data {
            Data::Real(v) => Ok(v),
            Data::Complex(_) => Err(FormatError::Shape("expected real data".into())),
        }
    }

    fn complex(&self) -> Result<&[Complex32], FormatError> {
        match &self.data {
            Data::Complex(v) => Ok(v),
            Data::Real(_) => Err(FormatError::Shape("expected complex data".into())),
        }
    }

    pub fn to_spectrum(&self) -> Result<DopplerSpectrum, FormatError> {
        self.expect(Kind::Spectrum)?;
        Ok(DopplerSpectrum {
            magnitude: self.real()?.iter().map(|&v| v as f64).collect(),
            freq_start: self.col_axis.start,
            bin_width: self.col_axis.step,
        })
    }

    pub fn to_map(&self) -> Result<RangeDopplerMap, FormatError> {
        self.expect(Kind::Map)?;
        Ok(RangeDopplerMap {
            magnitude: self.real()?.iter().map(|&v| v as f64).collect(),
            n_range: self.rows,
            n_doppler: self.cols,
            range_cell: self.row_axis.step,
            freq_start: self.col_axis.start,
            bin_width: self.col_axis.step,
        })
    }

    pub fn to_frames(&self) -> Result<Vec<EchoFrame>, FormatError> {
        self.expect(Kind::Frames)?;
        let data = self.complex()?;
        Ok((0..self.rows)
            .map(|r| EchoFrame {
                samples: data[r * self.cols..(r + 1) * self.cols]
                    .iter()
                    .map(|c| Complex64::new(c.re as f64, c.im as f64))
                    .collect(),
                symbol_index: self.row_axis.at(r).round() as usize,
                range_cell: self.col_axis.step,
            })
            .collect())
    }

    pub fn to_grid(&self) -> Result<ModulationGrid, FormatError> {
        self.expect(Kind::Grid)?;
        let data = self.complex()?;
        let rows = (0..self.rows)
            .map(|r| {
                data[r * self.cols..(r + 1) * self.cols]
                    .iter()
                    .map(|c| Complex64::new(c.re as f64, c.im as f64))
                    .collect()
            })
            .collect();
        ModulationGrid::from_rows(rows).map_err(|e| FormatError::Shape(e.to_string()))
    }

    /// Size of the binary encoding in bytes.
    pub fn binary_len(&self) -> usize {
        let width = match self.data {
            Data::Real(_) => 4,
            Data::Complex(_) => 8,
        };
        HEADER_LEN + self.rows * self.cols * width
    }
}

/// Encodes a payload in the binary format.
pub fn encode_binary(m: &Matrix) -> Vec<u8> {
    let mut out = Vec::with_capacity(m.binary_len());
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.push(match m.data {
        Data::Real(_) => 0,
        Data::Complex(_) => 1,
    });
    out.push(m.kind as u8);
    out.extend_from_slice(&(m.rows as u32).to_le_bytes());
    out.extend_from_slice(&(m.cols as u32).to_le_bytes());
    for v in [m.row_axis.start, m.row_axis.step, m.col_axis.start, m.col_axis.step] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    match &m.data {
        Data::Real(v) => v.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
        Data::Complex(v) => v.iter().for_each(|c| {
            out.extend_from_slice(&c.re.to_le_bytes());
            out.extend_from_slice(&c.im.to_le_bytes());
        }),
    }
    out
}

fn f64_at(b: &[u8], at: usize) -> f64 {
    f64::from_le_bytes(b[at..at + 8].try_into().unwrap())
}

fn f32_at(b: &[u8], at: usize) -> f32 {
    f32::from_le_bytes(b[at..at + 4].try_into().unwrap())
}

fn u32_at(b: &[u8], at: usize) -> usize {
    u32::from_le_bytes(b[at..at + 4].try_into().unwrap()) as usize
}

/// Decodes a binary payload.
pub fn decode_binary(b: &[u8]) -> Result<Matrix, FormatError> {
    if b.len() < HEADER_LEN {
        return Err(FormatError::Truncated {
            expected: HEADER_LEN,
            got: b.len(),
        });
    }
    if b[0..4] != MAGIC {
        return Err(FormatError::BadMagic);
    }
    let version = u16::from_le_bytes([b[4], b[5]]);
    if version != VERSION {
        return Err(FormatError::UnsupportedVersion(version));
    }
    let complex = match b[6] {
        0 => false,
        1 => true,
        other => return Err(FormatError::BadDtype(other)),
    };
    let kind = Kind::from_code(b[7])?;
    let (rows, cols) = (u32_at(b, 8), u32_at(b, 12));
    let count = rows * cols;
    let width = if complex { 8 } else { 4 };
    let expected = HEADER_LEN + count * width;
    if b.len() != expected {
        return Err(FormatError::Truncated { expected, got: b.len() });
    }
    let body = &b[HEADER_LEN..];
    let data = if complex {
        Data::Complex(
            (0..count)
                .map(|i| Complex32::new(f32_at(body, 8 * i), f32_at(body, 8 * i + 4)))
                .collect(),
        )
    } else {
        Data::Real((0..count).map(|i| f32_at(body, 4 * i)).collect())
    };
    Ok(Matrix {
        kind,
        rows,
        cols,
        row_axis: Axis {
            start: f64_at(b, 16),
            step: f64_at(b, 24),
        },
        col_axis: Axis {
            start: f64_at(b, 32),
            step: f64_at(b, 40),
        },
        data,
    })
}

pub fn write_binary(m: &Matrix, mut w: impl Write) -> Result<(), FormatError> {
    w.write_all(&encode_binary(m))?;
    Ok(())
}

pub fn read_binary(mut r: impl Read) -> Result<Matrix, FormatError> {
    let mut buf = Vec::new();
    r.read_to_end(&mut buf)?;
    decode_binary(&buf)
}

/// Encodes a payload as CSV text.
pub fn encode_csv(m: &Matrix) -> String {
    use std::fmt::Write as _;
    let mut out = String::new();
    let header = match m.kind {
        Kind::Spectrum => "freq_hz,magnitude",
        Kind::Map => "range_m,freq_hz,magnitude",
        Kind::Frames => "symbol,range_m,re,im",
        Kind::Grid => "symbol,subcarrier,re,im",
    };
    out.push_str(header);
    out.push('\n');
    for r in 0..m.rows {
        for c in 0..m.cols {
            let i = r * m.cols + c;
            let col = m.col_axis.at(c);
            match m.kind {
                Kind::Spectrum => write!(out, "{col}"),
                Kind::Map => write!(out, "{},{col}", m.row_axis.at(r)),
                Kind::Frames | Kind::Grid => write!(out, "{},{col}", m.row_axis.at(r)),
            }
            .unwrap();
            match &m.data {
                Data::Real(v) => writeln!(out, ",{:e}", v[i]),
                Data::Complex(v) => writeln!(out, ",{:e},{:e}", v[i].re, v[i].im),
            }
            .unwrap();
        }
    }
    out
}

pub fn write_csv(m: &Matrix, mut w: impl Write) -> Result<(), FormatError> {
    w.write_all(encode_csv(m).as_bytes())?;
    Ok(())
}

/// Encodes in the requested format.
pub fn encode(m: &Matrix, format: Format) -> Vec<u8> {
    match format {
        Format::Binary => encode_binary(m),
        Format::Csv => encode_csv(m).into_bytes(),
    }
}

/// Reads a spectrum back from `freq_hz,magnitude` CSV.
pub fn decode_spectrum_csv(text: &str) -> Result<DopplerSpectrum, FormatError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, "freq_hz,magnitude")) => {}
        _ => {
            return Err(FormatError::Csv {
                line: 1,
                message: "expected header freq_hz,magnitude".into(),
            })
        }
    }
    let mut freqs = Vec::new();
    let mut magnitude = Vec::new();
    for (k, line) in lines {
        let bad = |message: String| FormatError::Csv { line: k + 1, message };
        let (f, v) = line.split_once(',').ok_or_else(|| bad("expected two columns".into()))?;
        freqs.push(f.parse::<f64>().map_err(|e| bad(e.to_string()))?);
        magnitude.push(v.parse::<f64>().map_err(|e| bad(e.to_string()))?);
    }
    if freqs.len() < 2 {
        return Err(FormatError::Shape("spectrum needs at least two rows".into()));
    }
    Ok(DopplerSpectrum {
        freq_start: freqs[0],
        bin_width: (freqs[freqs.len() - 1] - freqs[0]) / (freqs.len() - 1) as f64,
        magnitude,
    })
}

/// Decodes a file by content: binary when it starts with the magic,
/// otherwise a spectrum CSV.
pub fn decode_any(bytes: &[u8]) -> Result<Matrix, FormatError> {
    if bytes.starts_with(&MAGIC) {
        return decode_binary(bytes);
    }
    let text = std::str::from_utf8(bytes).map_err(|_| FormatError::BadMagic)?;
    Ok(Matrix::from_spectrum(&decode_spectrum_csv(text)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spectrum(len: usize) -> DopplerSpectrum {
        DopplerSpectrum {
            magnitude: (0..len).map(|j| (j as f64 * 0.37).sin().abs()).collect(),
            freq_start: -((len / 2) as f64) * 7.62939453125,
            bin_width: 7.62939453125,
        }
    }

    #[test]
    fn spectrum_file_size() {
        let m = Matrix::from_spectrum(&spectrum(2048));
        assert_eq!(encode_binary(&m).len(), 48 + 2048 * 4);
        assert_eq!(m.binary_len(), 8240);
    }

    #[test]
    fn header_layout() {
        let m = Matrix::from_spectrum(&spectrum(4));
        let b = encode_binary(&m);
        assert_eq!(&b[0..4], b"MDSG");
        assert_eq!(u16::from_le_bytes([b[4], b[5]]), 1);
        assert_eq!((b[6], b[7]), (0, 0));
        assert_eq!(u32_at(&b, 8), 1);
        assert_eq!(u32_at(&b, 12), 4);
        assert_eq!(f64_at(&b, 32), -2.0 * 7.62939453125);
        assert_eq!(f32_at(&b, 48 + 4), (0.37f64).sin() as f32);
    }

    #[test]
    fn binary_round_trip() {
        let m = Matrix::from_spectrum(&spectrum(33));
        assert_eq!(decode_binary(&encode_binary(&m)).unwrap(), m);
        let frames: Vec<EchoFrame> = (0..3)
            .map(|k| EchoFrame {
                samples: (0..5).map(|j| Complex64::new(j as f64, -(k as f64))).collect(),
                symbol_index: 8 * k,
                range_cell: 1.5,
            })
            .collect();
        let m = Matrix::from_frames(&frames).unwrap();
        let back = decode_binary(&encode_binary(&m)).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.to_frames().unwrap(), frames);
    }

    #[test]
    fn grid_round_trip() {
        let grid = ModulationGrid::Constant(vec![
            Complex64::new(0.0, 0.0),
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, -1.0),
        ]);
        let m = Matrix::from_grid(&grid);
        assert_eq!(decode_binary(&encode_binary(&m)).unwrap().to_grid().unwrap(), grid);
    }

    #[test]
    fn rejects_corrupt_files() {
        let mut b = encode_binary(&Matrix::from_spectrum(&spectrum(8)));
        assert!(matches!(
            decode_binary(&b[..b.len() - 1]),
            Err(FormatError::Truncated { .. })
        ));
        b[7] = 9;
        assert!(matches!(decode_binary(&b), Err(FormatError::BadKind(9))));
        b[0] = b'X';
        assert!(matches!(decode_binary(&b), Err(FormatError::BadMagic)));
    }

    #[test]
    fn csv_row_count_and_header() {
        let text = encode_csv(&Matrix::from_spectrum(&spectrum(2048)));
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2049);
        assert_eq!(lines[0], "freq_hz,magnitude");
        assert!(lines[1025].starts_with("0,"), "{}", lines[1025]);
    }

    #[test]
    fn csv_spectrum_reads_back() {
        let spec = spectrum(16);
        let back = decode_spectrum_csv(&encode_csv(&Matrix::from_spectrum(&spec))).unwrap();
        assert_eq!(back.freq_start, spec.freq_start);
        assert_eq!(back.bin_width, spec.bin_width);
        for (a, b) in back.magnitude.iter().zip(&spec.magnitude) {
            assert_eq!(*a as f32, *b as f32);
        }
    }

    #[test]
    fn kind_mismatch() {
        let m = Matrix::from_spectrum(&spectrum(4));
        assert!(matches!(m.to_map(), Err(FormatError::KindMismatch { .. })));
    }
}
