//! Receiver-side preprocessing: packet detection, CFO estimation and
//! compensation, RMS normalization.

use super::DspError;
use crate::signal::ComplexSignal;
use crate::waveform::{synth_preamble, LoRaConfig};
use num_complex::Complex64;
use std::f64::consts::PI;

/// Default peak-to-median correlation ratio below which detection is
/// declared to have failed.
pub const DETECT_THRESHOLD: f64 = 6.0;

/// Locates the preamble start in `buffer` by cross-correlating against the
/// ideal preamble template. The integer peak is refined by parabolic
/// interpolation of the correlation magnitude and rounded back to a sample.
pub fn detect_and_sync(buffer: &ComplexSignal, config: &LoRaConfig) -> Result<usize, DspError> {
    detect_and_sync_with_threshold(buffer, config, DETECT_THRESHOLD)
}

pub fn detect_and_sync_with_threshold(
    buffer: &ComplexSignal,
    config: &LoRaConfig,
    threshold: f64,
) -> Result<usize, DspError> {
    let template = synth_preamble(config);
    let t = template.samples();
    let x = buffer.samples();
    if x.len() < t.len() {
        return Err(DspError::SignalTooShort {
            need: t.len(),
            got: x.len(),
        });
    }

    let n_offsets = x.len() - t.len() + 1;
    let mut mags = Vec::with_capacity(n_offsets);
    for o in 0..n_offsets {
        let mut acc = Complex64::new(0.0, 0.0);
        for (n, tn) in t.iter().enumerate() {
            acc += x[o + n] * tn.conj();
        }
        mags.push(acc.norm());
    }

    let peak = mags
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .expect("non-empty correlation");

    let mut sorted = mags.clone();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let median = sorted[sorted.len() / 2];
    if mags[peak] < threshold * median.max(f64::MIN_POSITIVE) {
        return Err(DspError::NotDetected);
    }

    // Parabolic refinement around the peak, then round to the nearest sample.
    let refined = if peak > 0 && peak + 1 < mags.len() {
        let (ym, y0, yp) = (mags[peak - 1], mags[peak], mags[peak + 1]);
        let denom = ym - 2.0 * y0 + yp;
        let delta = if denom.abs() > 1e-30 {
            (0.5 * (ym - yp) / denom).clamp(-0.5, 0.5)
        } else {
            0.0
        };
        peak as f64 + delta
    } else {
        peak as f64
    };
    Ok(refined.round().max(0.0) as usize)
}

/// Estimates the carrier frequency offset from symbol repetition: the angle
/// of sum(r[n+L] * conj(r[n])) over all available symbol pairs, divided by
/// 2*pi*L*Ts. Unambiguous for |cfo| < 1/(2*L*Ts).
pub fn estimate_cfo(preamble: &ComplexSignal, config: &LoRaConfig) -> Result<f64, DspError> {
    let l = config.samples_per_symbol();
    let x = preamble.samples();
    if x.len() < 2 * l {
        return Err(DspError::SignalTooShort {
            need: 2 * l,
            got: x.len(),
        });
    }
    let mut acc = Complex64::new(0.0, 0.0);
    for n in 0..(x.len() - l) {
        acc += x[n + l] * x[n].conj();
    }
    let ts = preamble.sample_interval_s();
    Ok(acc.arg() / (2.0 * PI * l as f64 * ts))
}

/// Removes a known CFO by rotating each sample by exp(-j*2*pi*f*n*Ts).
pub fn compensate_cfo(signal: &ComplexSignal, cfo_hz: f64) -> ComplexSignal {
    if cfo_hz == 0.0 {
        return signal.clone();
    }
    let ts = signal.sample_interval_s();
    let w = -2.0 * PI * cfo_hz * ts;
    let samples = signal
        .samples()
        .iter()
        .enumerate()
        .map(|(n, s)| s * Complex64::from_polar(1.0, w * n as f64))
        .collect();
    signal
        .with_samples(samples)
        .expect("rotation preserves finiteness")
}

/// Scales the signal so its RMS equals one.
pub fn normalize_rms(signal: &ComplexSignal) -> Result<ComplexSignal, DspError> {
    let rms = signal.rms();
    if rms <= 0.0 {
        return Err(DspError::ZeroPower);
    }
    let inv = 1.0 / rms;
    let samples = signal.samples().iter().map(|s| s * inv).collect();
    Ok(signal.with_samples(samples)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::add_awgn;
    use crate::impairment::{apply_impairments, DeviceProfile};
    use crate::streams;

    fn cfg() -> LoRaConfig {
        LoRaConfig::defaults(7).unwrap()
    }

    fn embed(template: &ComplexSignal, offset: usize, total: usize) -> ComplexSignal {
        let mut samples = vec![Complex64::new(0.0, 0.0); total];
        for (n, s) in template.samples().iter().enumerate() {
            samples[offset + n] = *s;
        }
        ComplexSignal::new(samples, template.sample_rate_hz()).unwrap()
    }

    #[test]
    fn sync_finds_noiseless_embeddings_exactly() {
        let c = cfg();
        let template = synth_preamble(&c);
        for offset in [0usize, 1, 100, 777, 2047] {
            let buffer = embed(&template, offset, 4096);
            assert_eq!(detect_and_sync(&buffer, &c).unwrap(), offset);
        }
    }

    #[test]
    fn sync_within_one_sample_at_zero_db() {
        let c = cfg();
        let template = synth_preamble(&c);
        let mut hits = 0;
        let trials = 200;
        for trial in 0..trials {
            let offset = 100 + (trial % 700) as usize;
            let buffer = embed(&template, offset, 3072);
            // -1.76 dB relative to the embedded buffer equals 0 dB relative
            // to the preamble itself (the signal occupies 2048 of 3072
            // samples, so the buffer RMS is sqrt(2048/3072) of the preamble
            // RMS).
            let snr = -10.0 * (3072.0f64 / 2048.0).log10();
            let noisy = add_awgn(&buffer, snr, &mut streams::stream(50, &[trial])).unwrap();
            if let Ok(found) = detect_and_sync(&noisy, &c) {
                if (found as i64 - offset as i64).abs() <= 1 {
                    hits += 1;
                }
            }
        }
        assert!(hits * 100 >= trials * 95, "hits {hits}/{trials}");
    }

    #[test]
    fn pure_noise_is_not_detected() {
        let c = cfg();
        let zeros = vec![Complex64::new(1e-12, 0.0); 4096];
        let silent = ComplexSignal::new(zeros, c.sample_rate_hz()).unwrap();
        let noise = add_awgn(&silent, -200.0, &mut streams::stream(3, &[])).unwrap();
        assert!(matches!(detect_and_sync(&noise, &c), Err(DspError::NotDetected)));
    }

    #[test]
    fn cfo_estimate_recovers_injected_offset() {
        let c = cfg();
        let clean = synth_preamble(&c);
        let mut p = DeviceProfile::identity(0);
        p.cfo_hz = 100.0;
        let shifted = apply_impairments(&clean, &p, &mut streams::stream(1, &[]), None);
        let est = estimate_cfo(&shifted, &c).unwrap();
        assert!((est - 100.0).abs() < 0.1, "estimate {est}");
    }

    #[test]
    fn cfo_estimate_near_zero_at_30_db() {
        let c = cfg();
        let clean = synth_preamble(&c);
        let noisy = add_awgn(&clean, 30.0, &mut streams::stream(4, &[])).unwrap();
        let est = estimate_cfo(&noisy, &c).unwrap();
        assert!(est.abs() < 0.1, "estimate {est}");
    }

    #[test]
    fn cfo_beyond_ambiguity_bound_aliases() {
        // SF9 defaults: L = 2^9 * 2 = 1024 samples, Ts = 4 us, so estimates
        // are unambiguous only within +/- 1/(2*L*Ts) ~ 122 Hz. An injected
        // +200 Hz offset aliases down by 1/(L*Ts) ~ 244.1 Hz.
        let c = LoRaConfig::defaults(9).unwrap();
        let l = c.samples_per_symbol() as f64;
        let ts = c.sample_interval_s();
        let bound = 1.0 / (2.0 * l * ts);
        assert!((bound - 122.0703125).abs() < 1e-6);
        let clean = synth_preamble(&c);
        let mut p = DeviceProfile::identity(0);
        p.cfo_hz = 200.0;
        let shifted = apply_impairments(&clean, &p, &mut streams::stream(1, &[]), None);
        let est = estimate_cfo(&shifted, &c).unwrap();
        let aliased = 200.0 - 1.0 / (l * ts);
        assert!((est - aliased).abs() < 0.5, "estimate {est}, expected alias {aliased}");
    }

    #[test]
    fn compensate_round_trip() {
        let c = cfg();
        let clean = synth_preamble(&c);
        assert_eq!(compensate_cfo(&clean, 0.0).samples(), clean.samples());
        let mut p = DeviceProfile::identity(0);
        p.cfo_hz = 123.4;
        let shifted = apply_impairments(&clean, &p, &mut streams::stream(1, &[]), None);
        let back = compensate_cfo(&shifted, 123.4);
        for (a, b) in clean.samples().iter().zip(back.samples()) {
            assert!((a - b).norm() < 1e-9);
        }
    }

    #[test]
    fn estimate_then_compensate_leaves_small_residual() {
        let c = cfg();
        let clean = synth_preamble(&c);
        let mut p = DeviceProfile::identity(0);
        p.cfo_hz = 187.3;
        let shifted = apply_impairments(&clean, &p, &mut streams::stream(1, &[]), None);
        let noisy = add_awgn(&shifted, 40.0, &mut streams::stream(2, &[])).unwrap();
        let est = estimate_cfo(&noisy, &c).unwrap();
        let fixed = compensate_cfo(&noisy, est);
        let residual = estimate_cfo(&fixed, &c).unwrap();
        assert!(residual.abs() < 0.5, "residual {residual}");
    }

    #[test]
    fn normalize_rms_unit_output_and_scale_invariance() {
        let c = cfg();
        let clean = synth_preamble(&c);
        let double = clean
            .with_samples(clean.samples().iter().map(|s| s * 7.0).collect())
            .unwrap();
        let a = normalize_rms(&clean).unwrap();
        let b = normalize_rms(&double).unwrap();
        assert!((a.rms() - 1.0).abs() < 1e-9);
        assert!((b.rms() - 1.0).abs() < 1e-9);
        for (x, y) in a.samples().iter().zip(b.samples()) {
            assert!((x - y).norm() < 1e-12);
        }
        let zeros = ComplexSignal::new(vec![Complex64::new(0.0, 0.0); 4], 1.0).unwrap();
        assert!(matches!(normalize_rms(&zeros), Err(DspError::ZeroPower)));
    }
}
