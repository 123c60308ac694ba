//! Simulation and DSP core for LoRa radio-frequency fingerprinting:
//! preamble synthesis, per-device hardware impairments, channel effects, and
//! channel-independent spectrogram preprocessing.

pub mod channel;
pub mod dsp;
pub mod impairment;
pub mod signal;
pub mod streams;
pub mod waveform;

pub use num_complex::Complex64;
pub use signal::{ComplexSignal, SignalError};
