//! Complex baseband signal container shared by the synthesis, impairment,
//! channel and DSP stages.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Errors raised by signal construction and basic signal arithmetic.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum SignalError {
    #[error("signal must contain at least one sample")]
    Empty,
    #[error("signal contains a non-finite sample at index {0}")]
    NonFinite(usize),
    #[error("sample rate must be positive, got {0}")]
    BadSampleRate(f64),
    #[error("operation requires nonzero signal power")]
    ZeroPower,
}

/// A sequence of complex baseband samples with sample-rate metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexSignal {
    samples: Vec<Complex64>,
    sample_rate_hz: f64,
}

impl ComplexSignal {
    /// Builds a signal, validating that it is non-empty, finite and has a
    /// positive sample rate.
    pub fn new(samples: Vec<Complex64>, sample_rate_hz: f64) -> Result<Self, SignalError> {
        if samples.is_empty() {
            return Err(SignalError::Empty);
        }
        if !(sample_rate_hz > 0.0) {
            return Err(SignalError::BadSampleRate(sample_rate_hz));
        }
        if let Some(idx) = samples
            .iter()
            .position(|c| !c.re.is_finite() || !c.im.is_finite())
        {
            return Err(SignalError::NonFinite(idx));
        }
        Ok(Self {
            samples,
            sample_rate_hz,
        })
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Sampling interval in seconds.
    pub fn sample_interval_s(&self) -> f64 {
        1.0 / self.sample_rate_hz
    }

    /// Root mean square of the sample magnitudes.
    pub fn rms(&self) -> f64 {
        let sum: f64 = self.samples.iter().map(|c| c.norm_sqr()).sum();
        (sum / self.samples.len() as f64).sqrt()
    }

    /// Replaces the sample buffer, keeping the sample rate. The new buffer
    /// must satisfy the same invariants as `new`.
    pub fn with_samples(&self, samples: Vec<Complex64>) -> Result<Self, SignalError> {
        Self::new(samples, self.sample_rate_hz)
    }

    /// Consumes the signal, returning the raw sample buffer.
    pub fn into_samples(self) -> Vec<Complex64> {
        self.samples
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_empty() {
        assert_eq!(
            ComplexSignal::new(vec![], 1.0).unwrap_err(),
            SignalError::Empty
        );
    }

    #[test]
    fn rejects_non_finite() {
        let s = vec![Complex64::new(0.0, 0.0), Complex64::new(f64::NAN, 0.0)];
        assert_eq!(
            ComplexSignal::new(s, 1.0).unwrap_err(),
            SignalError::NonFinite(1)
        );
    }

    #[test]
    fn rms_of_unit_circle_samples_is_one() {
        let s: Vec<Complex64> = (0..64)
            .map(|n| Complex64::from_polar(1.0, 0.1 * n as f64))
            .collect();
        let sig = ComplexSignal::new(s, 1000.0).unwrap();
        assert!((sig.rms() - 1.0).abs() < 1e-12);
    }
}
