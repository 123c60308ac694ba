//! Property tests for the waveform and spectrogram invariants.

use proptest::prelude::*;
use rffi_core::dsp::{channel_independent_spectrogram, spectrogram_width, StftConfig};
use rffi_core::waveform::{samples_per_preamble, synth_preamble, LoRaConfig};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn envelope_and_length_law(
        sf in 7u32..=12,
        os_pow in 0u32..=2,
        n_sym in 1usize..=8,
        amp in 0.25f64..4.0,
    ) {
        let os = 1u32 << os_pow;
        let bw = 125_000.0;
        let cfg = LoRaConfig::new(sf, bw, bw * os as f64, n_sym, amp).unwrap();
        let sig = synth_preamble(&cfg);
        prop_assert_eq!(sig.len(), samples_per_preamble(&cfg));
        prop_assert_eq!(sig.len(), n_sym * (1usize << sf) * os as usize);
        for s in sig.samples() {
            prop_assert!((s.norm() - amp).abs() < 1e-12);
        }
    }

    #[test]
    fn symbol_periodicity(sf in 7u32..=9, os_pow in 0u32..=2) {
        let os = 1u32 << os_pow;
        let bw = 125_000.0;
        let cfg = LoRaConfig::new(sf, bw, bw * os as f64, 3, 1.0).unwrap();
        let sig = synth_preamble(&cfg);
        let sps = cfg.samples_per_symbol();
        for n in 0..(sig.len() - sps) {
            prop_assert!((sig.samples()[n] - sig.samples()[n + sps]).norm() < 1e-9);
        }
    }

    #[test]
    fn cis_scale_invariance_exact_for_pow2(sf in 7u32..=8, scale_pow in -3i32..=6) {
        let cfg = LoRaConfig::defaults(sf).unwrap();
        let sig = synth_preamble(&cfg);
        let c = 2f64.powi(scale_pow);
        let scaled = sig.with_samples(sig.samples().iter().map(|s| s * c).collect()).unwrap();
        let stft_cfg = StftConfig::default();
        let a = channel_independent_spectrogram(&sig, &stft_cfg).unwrap();
        let b = channel_independent_spectrogram(&scaled, &stft_cfg).unwrap();
        prop_assert_eq!(a.values, b.values);
    }
}

#[test]
fn width_law_matches_cis_output_for_default_sfs() {
    let stft_cfg = StftConfig::default();
    for sf in 7..=9 {
        let cfg = LoRaConfig::defaults(sf).unwrap();
        let want = spectrogram_width(&cfg, &stft_cfg).unwrap();
        let got = channel_independent_spectrogram(&synth_preamble(&cfg), &stft_cfg).unwrap();
        assert_eq!(got.n_cols, want);
        assert_eq!(got.n_rows, stft_cfg.window_len);
    }
}
