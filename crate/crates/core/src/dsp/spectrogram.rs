//! Short-time Fourier transform and the channel-independent spectrogram.
//!
//! The channel-independent spectrogram is the dB ratio of adjacent STFT
//! frame magnitudes: a static channel multiplies adjacent frames by the same
//! frequency response, so the ratio cancels it.

use super::fft::fft_in_place;
use super::DspError;
use crate::signal::ComplexSignal;
use crate::waveform::{samples_per_preamble, LoRaConfig};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};

/// STFT parameters: rectangular window of `window_len` samples advancing by
/// `hop` samples per frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StftConfig {
    pub window_len: usize,
    pub hop: usize,
}

impl Default for StftConfig {
    fn default() -> Self {
        Self {
            window_len: 64,
            hop: 32,
        }
    }
}

impl StftConfig {
    pub fn validate(&self) -> Result<(), DspError> {
        if self.hop == 0 || self.hop > self.window_len || !self.window_len.is_power_of_two() {
            return Err(DspError::BadStftConfig {
                window_len: self.window_len,
                hop: self.hop,
            });
        }
        Ok(())
    }
}

/// Complex STFT matrix in centered row layout: `rows = window_len`, with
/// frequency bin 0 on row `window_len / 2`.
#[derive(Debug, Clone)]
pub struct StftMatrix {
    pub rows: usize,
    pub cols: usize,
    data: Vec<Complex64>,
}

impl StftMatrix {
    pub fn at(&self, row: usize, col: usize) -> Complex64 {
        self.data[row * self.cols + col]
    }

    pub fn column(&self, col: usize) -> Vec<Complex64> {
        (0..self.rows).map(|r| self.at(r, col)).collect()
    }
}

/// Real-valued dB spectrogram with optional dataset metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    pub n_rows: usize,
    pub n_cols: usize,
    /// Row-major dB values.
    pub values: Vec<f64>,
    pub sf_tag: Option<u32>,
    pub device_label: Option<u32>,
    pub snr_db: Option<f64>,
}

impl Spectrogram {
    pub fn at(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.n_cols + col]
    }

    /// Model-input version of the spectrogram: values clipped to
    /// [-60, +60] dB, then standardized to zero mean and unit variance.
    pub fn model_input(&self) -> Vec<f64> {
        let clipped: Vec<f64> = self.values.iter().map(|v| v.clamp(-60.0, 60.0)).collect();
        let n = clipped.len() as f64;
        let mean = clipped.iter().sum::<f64>() / n;
        let var = clipped.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        let std = var.sqrt();
        if std < 1e-12 {
            return vec![0.0; clipped.len()];
        }
        clipped.iter().map(|v| (v - mean) / std).collect()
    }

    /// Serializes as an 8-byte header (rows, cols as little-endian u32)
    /// followed by row-major little-endian f32 values.
    pub fn write_binary<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        w.write_all(&(self.n_rows as u32).to_le_bytes())?;
        w.write_all(&(self.n_cols as u32).to_le_bytes())?;
        for v in &self.values {
            w.write_all(&(*v as f32).to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> std::io::Result<Self> {
        let mut header = [0u8; 8];
        r.read_exact(&mut header)?;
        let rows = u32::from_le_bytes(header[0..4].try_into().unwrap()) as usize;
        let cols = u32::from_le_bytes(header[4..8].try_into().unwrap()) as usize;
        let mut buf = vec![0u8; rows * cols * 4];
        r.read_exact(&mut buf)?;
        let values = buf
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes(b.try_into().unwrap()) as f64)
            .collect();
        Ok(Self {
            n_rows: rows,
            n_cols: cols,
            values,
            sf_tag: None,
            device_label: None,
            snr_db: None,
        })
    }
}

/// Computes the STFT: column m is the windowed DFT of samples
/// [m*hop, m*hop + window_len), with rows reordered so that frequency bin 0
/// sits at row window_len/2.
pub fn stft(signal: &ComplexSignal, cfg: &StftConfig) -> Result<StftMatrix, DspError> {
    cfg.validate()?;
    let x = signal.samples();
    let n = cfg.window_len;
    if x.len() < n {
        return Err(DspError::SignalTooShort {
            need: n,
            got: x.len(),
        });
    }
    let m = (x.len() - n) / cfg.hop + 1;
    let mut data = vec![Complex64::new(0.0, 0.0); n * m];
    let mut frame = vec![Complex64::new(0.0, 0.0); n];
    for col in 0..m {
        let start = col * cfg.hop;
        frame.copy_from_slice(&x[start..start + n]);
        fft_in_place(&mut frame);
        for row in 0..n {
            // Centered layout: output row r holds frequency bin (r + n/2) mod n.
            let bin = (row + n / 2) % n;
            data[row * m + col] = frame[bin];
        }
    }
    Ok(StftMatrix { rows: n, cols: m, data })
}

/// Relative floor applied to squared frame magnitudes before the dB ratio.
const EPS_REL: f64 = 1e-12;

/// Converts a signal to the channel-independent spectrogram: element (k, m)
/// is 10*log10(|X[k,m+1]|^2 / |X[k,m]|^2) with both magnitudes floored at
/// 1e-12 times the mean squared magnitude of the whole STFT.
pub fn channel_independent_spectrogram(
    signal: &ComplexSignal,
    cfg: &StftConfig,
) -> Result<Spectrogram, DspError> {
    let x = stft(signal, cfg)?;
    if x.cols < 2 {
        return Err(DspError::SignalTooShort {
            need: cfg.window_len + cfg.hop,
            got: signal.len(),
        });
    }
    let mut pow = vec![0.0f64; x.rows * x.cols];
    let mut total = 0.0;
    for (i, p) in pow.iter_mut().enumerate() {
        *p = x.data[i].norm_sqr();
        total += *p;
    }
    let eps = EPS_REL * (total / pow.len() as f64).max(f64::MIN_POSITIVE);

    let out_cols = x.cols - 1;
    let mut values = vec![0.0f64; x.rows * out_cols];
    for r in 0..x.rows {
        for c in 0..out_cols {
            let num = pow[r * x.cols + c + 1].max(eps);
            let den = pow[r * x.cols + c].max(eps);
            values[r * out_cols + c] = 10.0 * (num / den).log10();
        }
    }
    Ok(Spectrogram {
        n_rows: x.rows,
        n_cols: out_cols,
        values,
        sf_tag: None,
        device_label: None,
        snr_db: None,
    })
}

/// Closed-form width of the channel-independent spectrogram of a full
/// preamble: (preamble_samples - window_len) / hop, which must be an integer.
pub fn spectrogram_width(config: &LoRaConfig, cfg: &StftConfig) -> Result<usize, DspError> {
    cfg.validate()?;
    let len = samples_per_preamble(config);
    if len < cfg.window_len || (len - cfg.window_len) % cfg.hop != 0 {
        return Err(DspError::NonIntegerWidth {
            signal_len: len,
            window_len: cfg.window_len,
            hop: cfg.hop,
        });
    }
    Ok((len - cfg.window_len) / cfg.hop)
}

/// Splits a signal into contiguous non-overlapping slices of `slice_len`
/// samples. The length must divide evenly.
pub fn slice_signal(signal: &ComplexSignal, slice_len: usize) -> Result<Vec<ComplexSignal>, DspError> {
    if slice_len == 0 || signal.len() % slice_len != 0 {
        return Err(DspError::NonDivisibleSlice {
            len: signal.len(),
            slice_len,
        });
    }
    signal
        .samples()
        .chunks_exact(slice_len)
        .map(|chunk| Ok(signal.with_samples(chunk.to_vec())?))
        .collect()
}

/// Default slice length used by the slicing classifier.
pub const DEFAULT_SLICE_LEN: usize = 256;

/// Marks the spectrogram cells that carry meaningful signal energy: both
/// STFT bins forming the ratio must hold at least `rel_power` of their
/// frame's peak power, measured on the given reference signal. Cells outside
/// this region sit on the noise/leakage floor, where dB ratios are not
/// informative.
pub fn interior_cells(
    reference: &ComplexSignal,
    cfg: &StftConfig,
    rel_power: f64,
) -> Result<Vec<bool>, DspError> {
    let x = stft(reference, cfg)?;
    if x.cols < 2 {
        return Err(DspError::SignalTooShort {
            need: cfg.window_len + cfg.hop,
            got: reference.len(),
        });
    }
    let frame_max: Vec<f64> = (0..x.cols)
        .map(|c| (0..x.rows).map(|r| x.at(r, c).norm_sqr()).fold(0.0, f64::max))
        .collect();
    let out_cols = x.cols - 1;
    let mut mask = vec![false; x.rows * out_cols];
    for r in 0..x.rows {
        for c in 0..out_cols {
            let p0 = x.at(r, c).norm_sqr();
            let p1 = x.at(r, c + 1).norm_sqr();
            mask[r * out_cols + c] = p0 >= rel_power * frame_max[c] && p1 >= rel_power * frame_max[c + 1];
        }
    }
    Ok(mask)
}
