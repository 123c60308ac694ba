//! Per-device hardware distortion model and reproducible device populations.
//!
//! The distortion chain applied to an ideal preamble is, in order: power-on
//! amplitude ramp (first symbol only), IQ gain/phase imbalance, DC offset,
//! memoryless Rapp power-amplifier compression, oscillator phase-noise random
//! walk, and carrier frequency offset rotation.

use crate::signal::ComplexSignal;
use crate::streams;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ImpairmentError {
    #[error("population needs at least two devices, got {0}")]
    TooFewDevices(usize),
    #[error("population needs at least one group, got {0}")]
    NoGroups(usize),
    #[error("invalid draw range for {name}: [{low}, {high}]")]
    BadRange { name: &'static str, low: f64, high: f64 },
}

/// Impairment parameter set for one simulated device.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceProfile {
    pub device_id: u32,
    pub cfo_hz: f64,
    pub iq_gain_imbalance_db: f64,
    pub iq_phase_imbalance_deg: f64,
    pub dc_offset: Complex64,
    pub pa_smoothness: f64,
    pub pa_saturation: f64,
    pub phase_noise_linewidth_hz: f64,
    pub transient_tau_s: f64,
    pub manufacturer_group: u32,
}

impl DeviceProfile {
    /// A profile whose entire chain is the identity map.
    pub fn identity(device_id: u32) -> Self {
        Self {
            device_id,
            cfo_hz: 0.0,
            iq_gain_imbalance_db: 0.0,
            iq_phase_imbalance_deg: 0.0,
            dc_offset: Complex64::new(0.0, 0.0),
            pa_smoothness: 1.0,
            pa_saturation: f64::INFINITY,
            phase_noise_linewidth_hz: 0.0,
            transient_tau_s: 0.0,
            manufacturer_group: 0,
        }
    }
}

/// Uniform draw range for one profile parameter. `low == high` disables the
/// parameter's spread (every device gets the same value).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamRange {
    pub low: f64,
    pub high: f64,
}

impl ParamRange {
    pub fn new(low: f64, high: f64) -> Self {
        Self { low, high }
    }

    pub fn fixed(value: f64) -> Self {
        Self { low: value, high: value }
    }

    fn validate(&self, name: &'static str, min_low: f64) -> Result<(), ImpairmentError> {
        if !self.low.is_finite() || !self.high.is_finite() || self.low > self.high || self.low < min_low {
            return Err(ImpairmentError::BadRange {
                name,
                low: self.low,
                high: self.high,
            });
        }
        Ok(())
    }

    fn center(&self) -> f64 {
        0.5 * (self.low + self.high)
    }

    fn half(&self) -> f64 {
        0.5 * (self.high - self.low)
    }
}

/// Specification of a simulated device population. Devices are assigned to
/// contiguous manufacturer groups; group-level parameter means are drawn
/// first and each device jitters around its group mean, so same-group devices
/// are harder to separate than cross-group pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationSpec {
    pub k_devices: usize,
    pub n_groups: usize,
    pub group_offset_scale: f64,
    pub seed: u64,
    pub cfo_hz: ParamRange,
    pub iq_gain_imbalance_db: ParamRange,
    pub iq_phase_imbalance_deg: ParamRange,
    pub dc_offset_mag: ParamRange,
    pub pa_smoothness: ParamRange,
    pub pa_saturation: ParamRange,
    pub phase_noise_linewidth_hz: ParamRange,
    pub transient_tau_s: ParamRange,
}

impl PopulationSpec {
    /// Desk-scale default population: two manufacturer clusters with
    /// parameter spreads typical of low-cost IoT front ends. CFO stays below
    /// 0.002x bandwidth so downstream compensation leaves the remaining
    /// impairments as the fingerprint.
    pub fn desk_default(k_devices: usize, seed: u64) -> Self {
        Self {
            k_devices,
            n_groups: 2,
            group_offset_scale: 0.6,
            seed,
            cfo_hz: ParamRange::new(-250.0, 250.0),
            iq_gain_imbalance_db: ParamRange::new(0.05, 0.9),
            iq_phase_imbalance_deg: ParamRange::new(0.3, 3.5),
            dc_offset_mag: ParamRange::new(0.004, 0.04),
            pa_smoothness: ParamRange::new(0.8, 3.0),
            pa_saturation: ParamRange::new(1.02, 1.7),
            phase_noise_linewidth_hz: ParamRange::new(1.0, 40.0),
            transient_tau_s: ParamRange::new(1.0e-5, 2.5e-4),
        }
    }
}

/// Fraction of a range's half-width used for per-device jitter around the
/// group mean.
const DEVICE_JITTER_FRAC: f64 = 0.25;

struct GroupMeans {
    cfo_hz: f64,
    iq_gain_imbalance_db: f64,
    iq_phase_imbalance_deg: f64,
    dc_offset_mag: f64,
    dc_offset_phase: f64,
    pa_smoothness: f64,
    pa_saturation: f64,
    phase_noise_linewidth_hz: f64,
    transient_tau_s: f64,
}

fn group_of(device: usize, k: usize, n_groups: usize) -> u32 {
    let per_group = k.div_ceil(n_groups);
    (device / per_group) as u32
}

fn draw_group_mean(range: &ParamRange, scale: f64, rng: &mut impl Rng) -> f64 {
    let u: f64 = rng.gen_range(-1.0..=1.0);
    range.center() + scale * range.half() * u
}

fn draw_device_value(mean: f64, range: &ParamRange, rng: &mut impl Rng) -> f64 {
    let u: f64 = rng.gen_range(-1.0..=1.0);
    (mean + DEVICE_JITTER_FRAC * range.half() * u).clamp(range.low, range.high)
}

/// Draws `k_devices` profiles deterministically from the population seed.
pub fn draw_profiles(spec: &PopulationSpec) -> Result<Vec<DeviceProfile>, ImpairmentError> {
    if spec.k_devices < 2 {
        return Err(ImpairmentError::TooFewDevices(spec.k_devices));
    }
    if spec.n_groups == 0 {
        return Err(ImpairmentError::NoGroups(spec.n_groups));
    }
    spec.cfo_hz.validate("cfo_hz", f64::NEG_INFINITY)?;
    spec.iq_gain_imbalance_db.validate("iq_gain_imbalance_db", f64::NEG_INFINITY)?;
    spec.iq_phase_imbalance_deg.validate("iq_phase_imbalance_deg", f64::NEG_INFINITY)?;
    spec.dc_offset_mag.validate("dc_offset_mag", 0.0)?;
    spec.pa_smoothness.validate("pa_smoothness", f64::MIN_POSITIVE)?;
    spec.pa_saturation.validate("pa_saturation", f64::MIN_POSITIVE)?;
    spec.phase_noise_linewidth_hz.validate("phase_noise_linewidth_hz", 0.0)?;
    spec.transient_tau_s.validate("transient_tau_s", 0.0)?;

    let n_groups = spec.n_groups.min(spec.k_devices);
    let mut rng = streams::stream(spec.seed, &[streams::tag("profiles")]);

    let means: Vec<GroupMeans> = (0..n_groups)
        .map(|_| GroupMeans {
            cfo_hz: draw_group_mean(&spec.cfo_hz, spec.group_offset_scale, &mut rng),
            iq_gain_imbalance_db: draw_group_mean(&spec.iq_gain_imbalance_db, spec.group_offset_scale, &mut rng),
            iq_phase_imbalance_deg: draw_group_mean(&spec.iq_phase_imbalance_deg, spec.group_offset_scale, &mut rng),
            dc_offset_mag: draw_group_mean(&spec.dc_offset_mag, spec.group_offset_scale, &mut rng),
            dc_offset_phase: rng.gen_range(0.0..(2.0 * PI)),
            pa_smoothness: draw_group_mean(&spec.pa_smoothness, spec.group_offset_scale, &mut rng),
            pa_saturation: draw_group_mean(&spec.pa_saturation, spec.group_offset_scale, &mut rng),
            phase_noise_linewidth_hz: draw_group_mean(&spec.phase_noise_linewidth_hz, spec.group_offset_scale, &mut rng),
            transient_tau_s: draw_group_mean(&spec.transient_tau_s, spec.group_offset_scale, &mut rng),
        })
        .collect();

    let profiles = (0..spec.k_devices)
        .map(|i| {
            let g = group_of(i, spec.k_devices, n_groups);
            let m = &means[g as usize];
            let dc_mag = draw_device_value(m.dc_offset_mag, &spec.dc_offset_mag, &mut rng);
            let dc_phase = m.dc_offset_phase
                + DEVICE_JITTER_FRAC * PI * rng.gen_range(-1.0..=1.0f64);
            DeviceProfile {
                device_id: i as u32,
                cfo_hz: draw_device_value(m.cfo_hz, &spec.cfo_hz, &mut rng),
                iq_gain_imbalance_db: draw_device_value(m.iq_gain_imbalance_db, &spec.iq_gain_imbalance_db, &mut rng),
                iq_phase_imbalance_deg: draw_device_value(m.iq_phase_imbalance_deg, &spec.iq_phase_imbalance_deg, &mut rng),
                dc_offset: Complex64::from_polar(dc_mag, dc_phase),
                pa_smoothness: draw_device_value(m.pa_smoothness, &spec.pa_smoothness, &mut rng),
                pa_saturation: draw_device_value(m.pa_saturation, &spec.pa_saturation, &mut rng),
                phase_noise_linewidth_hz: draw_device_value(m.phase_noise_linewidth_hz, &spec.phase_noise_linewidth_hz, &mut rng),
                transient_tau_s: draw_device_value(m.transient_tau_s, &spec.transient_tau_s, &mut rng),
                manufacturer_group: g,
            }
        })
        .collect();
    Ok(profiles)
}

/// Rapp compression of a magnitude sample.
fn rapp(a: f64, saturation: f64, smoothness: f64) -> f64 {
    let ratio = a / saturation;
    a / (1.0 + ratio.powf(2.0 * smoothness)).powf(1.0 / (2.0 * smoothness))
}

/// Applies the device's distortion chain to a signal.
///
/// `first_symbol_len` enables the power-on amplitude ramp over that many
/// leading samples; pass `None` for signals that do not start at device
/// power-on. The phase-noise stream must be supplied per call so that packet
/// realizations are reproducible.
pub fn apply_impairments(
    signal: &ComplexSignal,
    profile: &DeviceProfile,
    rng: &mut impl Rng,
    first_symbol_len: Option<usize>,
) -> ComplexSignal {
    let ts = signal.sample_interval_s();
    let mut out: Vec<Complex64> = signal.samples().to_vec();

    // 1. Power-on transient ramp over the first symbol.
    if let Some(sym_len) = first_symbol_len {
        if profile.transient_tau_s > 0.0 {
            let tau = profile.transient_tau_s;
            for (n, s) in out.iter_mut().take(sym_len).enumerate() {
                let t = n as f64 * ts;
                *s *= 1.0 - (-t / tau).exp();
            }
        }
    }

    // 2. IQ imbalance: y = mu*x + nu*conj(x) with mu=(1+g e^{j theta})/2.
    let g = 10f64.powf(profile.iq_gain_imbalance_db / 20.0);
    let theta = profile.iq_phase_imbalance_deg.to_radians();
    let ge = Complex64::from_polar(g, theta);
    let mu = (Complex64::new(1.0, 0.0) + ge) * 0.5;
    let nu = (Complex64::new(1.0, 0.0) - ge) * 0.5;
    if nu.norm_sqr() > 0.0 {
        for s in out.iter_mut() {
            *s = mu * *s + nu * s.conj();
        }
    }

    // 3. DC offset.
    if profile.dc_offset != Complex64::new(0.0, 0.0) {
        for s in out.iter_mut() {
            *s += profile.dc_offset;
        }
    }

    // 4. Rapp PA compression on magnitude, phase preserved.
    if profile.pa_saturation.is_finite() {
        for s in out.iter_mut() {
            let a = s.norm();
            if a > 0.0 {
                *s *= rapp(a, profile.pa_saturation, profile.pa_smoothness) / a;
            }
        }
    }

    // 5. Phase-noise random walk, per-sample increment variance 2*pi*lw*Ts.
    if profile.phase_noise_linewidth_hz > 0.0 {
        let sigma = (2.0 * PI * profile.phase_noise_linewidth_hz * ts).sqrt();
        let normal = Normal::new(0.0, sigma).expect("sigma finite");
        let mut phase = 0.0;
        for s in out.iter_mut() {
            phase += normal.sample(rng);
            *s *= Complex64::from_polar(1.0, phase);
        }
    }

    // 6. CFO rotation.
    if profile.cfo_hz != 0.0 {
        let w = 2.0 * PI * profile.cfo_hz * ts;
        for (n, s) in out.iter_mut().enumerate() {
            *s *= Complex64::from_polar(1.0, w * n as f64);
        }
    }

    signal
        .with_samples(out)
        .expect("impairment chain preserves length and finiteness")
}
