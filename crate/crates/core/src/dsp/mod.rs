//! Receiver-side preprocessing and spectrogram transforms.

mod fft;
mod spectrogram;
mod sync;

pub use spectrogram::{
    channel_independent_spectrogram, interior_cells, slice_signal, spectrogram_width, stft, Spectrogram,
    StftConfig, StftMatrix, DEFAULT_SLICE_LEN,
};
pub use sync::{
    compensate_cfo, detect_and_sync, detect_and_sync_with_threshold, estimate_cfo, normalize_rms,
    DETECT_THRESHOLD,
};

use crate::signal::SignalError;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DspError {
    #[error("signal too short: need at least {need} samples, got {got}")]
    SignalTooShort { need: usize, got: usize },
    #[error("no preamble detected (correlation peak below threshold)")]
    NotDetected,
    #[error("operation requires nonzero signal power")]
    ZeroPower,
    #[error("invalid STFT config: window_len {window_len} must be a power of two and hop {hop} in 1..=window_len")]
    BadStftConfig { window_len: usize, hop: usize },
    #[error("spectrogram width is not an integer for signal_len {signal_len}, window {window_len}, hop {hop}")]
    NonIntegerWidth { signal_len: usize, window_len: usize, hop: usize },
    #[error("signal length {len} is not divisible by slice length {slice_len}")]
    NonDivisibleSlice { len: usize, slice_len: usize },
    #[error(transparent)]
    Signal(#[from] SignalError),
}
