//! Propagation effects: static multipath and SNR-calibrated AWGN.

use crate::signal::{ComplexSignal, SignalError};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChannelError {
    #[error("channel taps must be non-empty with a nonzero first tap")]
    BadTaps,
    #[error(transparent)]
    Signal(#[from] SignalError),
}

/// Channel description: FIR taps plus a target SNR (`None` = noiseless).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelSpec {
    pub taps: Vec<Complex64>,
    pub snr_db: Option<f64>,
}

impl ChannelSpec {
    /// Single unit tap, noiseless.
    pub fn ideal() -> Self {
        Self {
            taps: vec![Complex64::new(1.0, 0.0)],
            snr_db: None,
        }
    }

    /// Single unit tap with AWGN at the given SNR.
    pub fn awgn(snr_db: f64) -> Self {
        Self {
            taps: vec![Complex64::new(1.0, 0.0)],
            snr_db: Some(snr_db),
        }
    }

    pub fn validate(&self) -> Result<(), ChannelError> {
        if self.taps.is_empty() || self.taps[0] == Complex64::new(0.0, 0.0) {
            return Err(ChannelError::BadTaps);
        }
        Ok(())
    }
}

/// Linear convolution with the tap vector, truncated to the input length
/// (left-aligned) so downstream spectrogram widths are unaffected.
pub fn apply_multipath(signal: &ComplexSignal, taps: &[Complex64]) -> Result<ComplexSignal, ChannelError> {
    if taps.is_empty() || taps[0] == Complex64::new(0.0, 0.0) {
        return Err(ChannelError::BadTaps);
    }
    let x = signal.samples();
    let mut y = vec![Complex64::new(0.0, 0.0); x.len()];
    for (n, out) in y.iter_mut().enumerate() {
        let mut acc = Complex64::new(0.0, 0.0);
        for (k, tap) in taps.iter().enumerate() {
            if k > n {
                break;
            }
            acc += tap * x[n - k];
        }
        *out = acc;
    }
    Ok(signal.with_samples(y)?)
}

/// Adds circularly-symmetric complex Gaussian noise so that the realized SNR
/// (signal RMS over noise RMS, in dB) targets `snr_db`. Each of the real and
/// imaginary branches gets variance sigma^2 / 2 with sigma the noise RMS.
pub fn add_awgn(
    signal: &ComplexSignal,
    snr_db: f64,
    rng: &mut impl Rng,
) -> Result<ComplexSignal, ChannelError> {
    let rms = signal.rms();
    if rms <= 0.0 {
        return Err(ChannelError::Signal(SignalError::ZeroPower));
    }
    let noise_rms = rms * 10f64.powf(-snr_db / 20.0);
    let branch = Normal::new(0.0, noise_rms / 2f64.sqrt()).expect("finite sigma");
    let samples = signal
        .samples()
        .iter()
        .map(|s| s + Complex64::new(branch.sample(rng), branch.sample(rng)))
        .collect();
    Ok(signal.with_samples(samples)?)
}

/// Multipath followed by AWGN; the SNR is calibrated against the signal as it
/// arrives at the receiver, i.e. after the channel taps.
pub fn apply_channel(
    signal: &ComplexSignal,
    spec: &ChannelSpec,
    rng: &mut impl Rng,
) -> Result<ComplexSignal, ChannelError> {
    spec.validate()?;
    let faded = apply_multipath(signal, &spec.taps)?;
    match spec.snr_db {
        Some(snr) => add_awgn(&faded, snr, rng),
        None => Ok(faded),
    }
}
