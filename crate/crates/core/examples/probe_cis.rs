use num_complex::Complex64;
use rffi_core::channel::{apply_channel, ChannelSpec};
use rffi_core::dsp::{channel_independent_spectrogram, stft, StftConfig};
use rffi_core::streams;
use rffi_core::waveform::{synth_preamble, LoRaConfig};

fn stats(label: &str, a: &[f64], b: &[f64], keep: Option<&[bool]>) {
    let mut deltas: Vec<f64> = a.iter().zip(b).enumerate()
        .filter(|(i, _)| keep.map_or(true, |k| k[*i]))
        .map(|(_, (x, y))| (x - y).abs()).collect();
    deltas.sort_by(|x, y| x.total_cmp(y));
    println!("{label}: n={} median {:.3} p90 {:.3} max {:.2}", deltas.len(),
        deltas[deltas.len()/2], deltas[deltas.len()*9/10], deltas[deltas.len()-1]);
}

fn main() {
    let sig = synth_preamble(&LoRaConfig::defaults(7).unwrap());
    let cfg = StftConfig::default();
    let clean = channel_independent_spectrogram(&sig, &cfg).unwrap();

    // High-energy cell mask: both frames of the ratio are within 20 dB of the frame max.
    let x = stft(&sig, &cfg).unwrap();
    let mut keep = vec![false; clean.values.len()];
    for c in 0..clean.n_cols {
        let fmax = |col: usize| (0..x.rows).map(|r| x.at(r, col).norm_sqr()).fold(0.0f64, f64::max);
        let m0 = fmax(c); let m1 = fmax(c + 1);
        for r in 0..clean.n_rows {
            let p0 = x.at(r, c).norm_sqr(); let p1 = x.at(r, c + 1).norm_sqr();
            keep[r * clean.n_cols + c] = p0 > 1e-2 * m0 && p1 > 1e-2 * m1;
        }
    }
    println!("kept fraction: {:.3}", keep.iter().filter(|&&k| k).count() as f64 / keep.len() as f64);

    let tap = ChannelSpec { taps: vec![Complex64::new(1.0, 0.0), Complex64::new(0.35, 0.35)], snr_db: None };
    let faded = apply_channel(&sig, &tap, &mut streams::stream(8, &[])).unwrap();
    let cis_mp = channel_independent_spectrogram(&faded, &cfg).unwrap();
    stats("multipath only, all cells ", &clean.values, &cis_mp.values, None);
    stats("multipath only, high cells", &clean.values, &cis_mp.values, Some(&keep));

    let noisy = apply_channel(&sig, &ChannelSpec::awgn(40.0), &mut streams::stream(9, &[])).unwrap();
    let cis_n = channel_independent_spectrogram(&noisy, &cfg).unwrap();
    stats("noise only 40dB, all cells ", &clean.values, &cis_n.values, None);
    stats("noise only 40dB, high cells", &clean.values, &cis_n.values, Some(&keep));

    let both = ChannelSpec { taps: vec![Complex64::new(1.0, 0.0), Complex64::new(0.35, 0.35)], snr_db: Some(30.0) };
    let b = apply_channel(&sig, &both, &mut streams::stream(10, &[])).unwrap();
    let cis_b = channel_independent_spectrogram(&b, &cfg).unwrap();
    stats("tap0.5+30dB, all cells ", &clean.values, &cis_b.values, None);
    stats("tap0.5+30dB, high cells", &clean.values, &cis_b.values, Some(&keep));
}
