//! Ideal (impairment-free) LoRa preamble synthesis.
//!
//! A LoRa preamble is a run of identical baseband up-chirps. Each symbol
//! sweeps the instantaneous frequency linearly from -B/2 to +B/2 over the
//! symbol duration 2^sf / B.

use crate::signal::ComplexSignal;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WaveformError {
    #[error("spreading factor {0} outside supported range 7..=12")]
    SpreadingFactor(u32),
    #[error("sample rate {sample_rate_hz} Hz is not an integer multiple of bandwidth {bandwidth_hz} Hz")]
    NonIntegerOversampling { sample_rate_hz: f64, bandwidth_hz: f64 },
    #[error("bandwidth must be positive, got {0}")]
    BadBandwidth(f64),
    #[error("preamble must contain at least one symbol")]
    NoSymbols,
    #[error("amplitude must be positive and finite, got {0}")]
    BadAmplitude(f64),
}

/// LoRa physical-layer configuration for preamble synthesis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoRaConfig {
    sf: u32,
    bandwidth_hz: f64,
    sample_rate_hz: f64,
    n_preamble_symbols: usize,
    amplitude: f64,
}

impl LoRaConfig {
    /// Validates and builds a configuration.
    ///
    /// The sample rate must be an integer multiple of the bandwidth so that
    /// every symbol lands on an integer sample count.
    pub fn new(
        sf: u32,
        bandwidth_hz: f64,
        sample_rate_hz: f64,
        n_preamble_symbols: usize,
        amplitude: f64,
    ) -> Result<Self, WaveformError> {
        if !(7..=12).contains(&sf) {
            return Err(WaveformError::SpreadingFactor(sf));
        }
        if !(bandwidth_hz > 0.0) {
            return Err(WaveformError::BadBandwidth(bandwidth_hz));
        }
        let ratio = sample_rate_hz / bandwidth_hz;
        if !(ratio >= 1.0) || (ratio - ratio.round()).abs() > 1e-9 {
            return Err(WaveformError::NonIntegerOversampling {
                sample_rate_hz,
                bandwidth_hz,
            });
        }
        if n_preamble_symbols == 0 {
            return Err(WaveformError::NoSymbols);
        }
        if !(amplitude > 0.0 && amplitude.is_finite()) {
            return Err(WaveformError::BadAmplitude(amplitude));
        }
        Ok(Self {
            sf,
            bandwidth_hz,
            sample_rate_hz,
            n_preamble_symbols,
            amplitude,
        })
    }

    /// Default experiment settings for a given spreading factor:
    /// 125 kHz bandwidth, 250 kHz sampling, 8 preamble symbols, unit amplitude.
    pub fn defaults(sf: u32) -> Result<Self, WaveformError> {
        Self::new(sf, 125_000.0, 250_000.0, 8, 1.0)
    }

    pub fn sf(&self) -> u32 {
        self.sf
    }

    pub fn bandwidth_hz(&self) -> f64 {
        self.bandwidth_hz
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    pub fn n_preamble_symbols(&self) -> usize {
        self.n_preamble_symbols
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    /// Integer oversampling factor sample_rate / bandwidth.
    pub fn oversampling(&self) -> usize {
        (self.sample_rate_hz / self.bandwidth_hz).round() as usize
    }

    /// Number of samples in one symbol: 2^sf * oversampling.
    pub fn samples_per_symbol(&self) -> usize {
        (1usize << self.sf) * self.oversampling()
    }

    /// Sampling interval in seconds.
    pub fn sample_interval_s(&self) -> f64 {
        1.0 / self.sample_rate_hz
    }
}

/// Duration of one LoRa symbol in seconds: 2^sf / bandwidth.
pub fn symbol_duration(config: &LoRaConfig) -> f64 {
    (1u64 << config.sf) as f64 / config.bandwidth_hz
}

/// Total sample count of a synthesized preamble.
pub fn samples_per_preamble(config: &LoRaConfig) -> usize {
    config.n_preamble_symbols * config.samples_per_symbol()
}

/// Synthesizes the preamble: `n_preamble_symbols` repetitions of the up-chirp
/// A*exp(j(-pi*B*t + pi*(B/T)*t^2)) sampled at t_n = n/sample_rate, with the
/// phase reference resetting at each symbol boundary.
pub fn synth_preamble(config: &LoRaConfig) -> ComplexSignal {
    let sps = config.samples_per_symbol();
    let t_sym = symbol_duration(config);
    let b = config.bandwidth_hz;
    let ts = config.sample_interval_s();
    let a = config.amplitude;

    let mut symbol = Vec::with_capacity(sps);
    for n in 0..sps {
        let t = n as f64 * ts;
        let phase = -PI * b * t + PI * (b / t_sym) * t * t;
        symbol.push(Complex64::from_polar(a, phase));
    }

    let mut samples = Vec::with_capacity(sps * config.n_preamble_symbols);
    for _ in 0..config.n_preamble_symbols {
        samples.extend_from_slice(&symbol);
    }
    ComplexSignal::new(samples, config.sample_rate_hz)
        .expect("synthesized preamble is non-empty and finite")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symbol_duration_matches_direct_evaluation() {
        // 2^7 / 125000 and 2^8 / 125000, computed independently.
        let c7 = LoRaConfig::defaults(7).unwrap();
        assert!((symbol_duration(&c7) - 1.024e-3).abs() < 1e-15);
        let c8 = LoRaConfig::defaults(8).unwrap();
        assert!((symbol_duration(&c8) - 2.048e-3).abs() < 1e-15);
        let c = LoRaConfig::new(7, 128.0, 128.0, 8, 1.0).unwrap();
        assert!((symbol_duration(&c) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn preamble_lengths_match_published_sf_settings() {
        for (sf, expect) in [(7u32, 2048usize), (8, 4096), (9, 8192)] {
            let c = LoRaConfig::defaults(sf).unwrap();
            assert_eq!(samples_per_preamble(&c), expect);
            assert_eq!(synth_preamble(&c).len(), expect);
        }
        let c = LoRaConfig::new(7, 125_000.0, 125_000.0, 1, 1.0).unwrap();
        assert_eq!(samples_per_preamble(&c), 128);
    }

    #[test]
    fn constant_envelope() {
        let c = LoRaConfig::defaults(7).unwrap();
        let sig = synth_preamble(&c);
        for s in sig.samples() {
            assert!((s.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn instantaneous_frequency_sweeps_from_minus_to_plus_half_bandwidth() {
        // Finite-difference phase slope of the generated samples.
        let c = LoRaConfig::defaults(7).unwrap();
        let sig = synth_preamble(&c);
        let ts = c.sample_interval_s();
        let inst_freq = |n: usize| {
            let d = sig.samples()[n + 1] * sig.samples()[n].conj();
            d.arg() / (2.0 * PI * ts)
        };
        let b = c.bandwidth_hz();
        let t_sym = symbol_duration(&c);
        // Midpoint convention: the two-sample phase difference estimates the
        // frequency at t = (n + 1/2) * ts.
        let expected = |n: usize| -b / 2.0 + (b / t_sym) * (n as f64 + 0.5) * ts;
        assert!((inst_freq(0) - expected(0)).abs() < 1e-6);
        let mid = c.samples_per_symbol() / 2;
        assert!((inst_freq(mid) - expected(mid)).abs() < 1e-6);
        // Just before the top of the sweep.
        let last = c.samples_per_symbol() - 2;
        assert!((inst_freq(last) - expected(last)).abs() < 1e-6);
    }

    #[test]
    fn symbols_repeat_exactly() {
        let c = LoRaConfig::defaults(8).unwrap();
        let sig = synth_preamble(&c);
        let sps = c.samples_per_symbol();
        for n in 0..(sig.len() - sps) {
            let d = sig.samples()[n] - sig.samples()[n + sps];
            assert!(d.norm() < 1e-9);
        }
    }

    #[test]
    fn rejects_invalid_configs() {
        assert!(LoRaConfig::new(6, 125e3, 250e3, 8, 1.0).is_err());
        assert!(LoRaConfig::new(7, 125e3, 100e3, 8, 1.0).is_err());
        assert!(LoRaConfig::new(7, 125e3, 300e3, 8, 1.0).is_err());
        assert!(LoRaConfig::new(7, 125e3, 250e3, 0, 1.0).is_err());
        assert!(LoRaConfig::new(7, 125e3, 250e3, 8, 0.0).is_err());
    }
}
