//! Dataset generation and on-disk persistence.
//!
//! Records store the noiseless post-impairment preamble; noise is added on
//! demand during augmentation and evaluation, mirroring the treatment of
//! high-SNR captures as clean references. On disk a dataset is a directory
//! holding `manifest.json` and one binary IQ file per (device, SF) pair with
//! concatenated records as little-endian f32 interleaved I/Q.

use crate::error::{io_err, json_err, PipelineError};
use num_complex::Complex64;
use rffi_core::channel::add_awgn;
use rffi_core::impairment::{apply_impairments, draw_profiles, DeviceProfile, PopulationSpec};
use rffi_core::signal::ComplexSignal;
use rffi_core::streams;
use rffi_core::waveform::{samples_per_preamble, synth_preamble, LoRaConfig};
use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::fs;
use std::path::Path;

#[derive(Debug, Clone)]
pub struct DatasetRecord {
    pub iq: ComplexSignal,
    pub label: u32,
    pub sf: u32,
    pub record_seed: u64,
    pub profile_hash: String,
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub population: PopulationSpec,
    pub profiles: Vec<DeviceProfile>,
    pub sfs: Vec<u32>,
    pub n_per_device_per_sf: usize,
    pub seed: u64,
    pub bandwidth_hz: f64,
    pub sample_rate_hz: f64,
    pub records: Vec<DatasetRecord>,
}

impl Dataset {
    pub fn k_devices(&self) -> usize {
        self.profiles.len()
    }

    /// LoRa settings the records were synthesized under.
    pub fn lora_config(&self, sf: u32) -> Result<LoRaConfig, PipelineError> {
        Ok(LoRaConfig::new(
            sf,
            self.bandwidth_hz,
            self.sample_rate_hz,
            8,
            1.0,
        )?)
    }

    /// Indices of records for one device, in record order.
    pub fn indices_for_device(&self, label: u32) -> Vec<usize> {
        self.records
            .iter()
            .enumerate()
            .filter(|(_, r)| r.label == label)
            .map(|(i, _)| i)
            .collect()
    }
}

/// Short hex digest identifying a profile set.
pub fn profile_hash(profiles: &[DeviceProfile]) -> String {
    let json = serde_json::to_vec(profiles).expect("profiles serialize");
    let digest = Sha256::digest(&json);
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}

/// Synthesizes `n_per_device_per_sf` impaired, noiseless preambles per
/// device per SF. Every record gets its own impairment noise stream derived
/// from (seed, device, sf, index), so regeneration is bit-identical.
pub fn generate_dataset(
    population: &PopulationSpec,
    sfs: &[u32],
    n_per_device_per_sf: usize,
    seed: u64,
) -> Result<Dataset, PipelineError> {
    let profiles = draw_profiles(population)?;
    let hash = profile_hash(&profiles);
    let mut records = Vec::with_capacity(profiles.len() * sfs.len() * n_per_device_per_sf);
    for profile in &profiles {
        for &sf in sfs {
            let config = LoRaConfig::defaults(sf)?;
            let clean = synth_preamble(&config);
            let first_symbol = config.samples_per_symbol();
            for idx in 0..n_per_device_per_sf {
                let record_seed = streams::derive_seed(
                    seed,
                    &[
                        streams::tag("packet"),
                        profile.device_id as u64,
                        sf as u64,
                        idx as u64,
                    ],
                );
                let mut rng = streams::stream(record_seed, &[]);
                let iq =
                    apply_impairments(&clean, profile, &mut rng, Some(first_symbol));
                records.push(DatasetRecord {
                    iq,
                    label: profile.device_id,
                    sf,
                    record_seed,
                    profile_hash: hash.clone(),
                });
            }
        }
    }
    let config = LoRaConfig::defaults(sfs.first().copied().unwrap_or(7))?;
    Ok(Dataset {
        population: population.clone(),
        profiles,
        sfs: sfs.to_vec(),
        n_per_device_per_sf,
        seed,
        bandwidth_hz: config.bandwidth_hz(),
        sample_rate_hz: config.sample_rate_hz(),
        records,
    })
}

/// Offline augmentation: each record is replicated `copies` times and passed
/// through AWGN at an SNR drawn uniformly from [snr_low_db, snr_high_db].
pub fn augment_offline(
    dataset: &Dataset,
    snr_low_db: f64,
    snr_high_db: f64,
    copies: usize,
    seed: u64,
) -> Result<Dataset, PipelineError> {
    if copies == 0 {
        return Err(PipelineError::BadConfig(
            "offline augmentation needs copies >= 1".into(),
        ));
    }
    let mut records = Vec::with_capacity(dataset.records.len() * copies);
    for (idx, record) in dataset.records.iter().enumerate() {
        for copy in 0..copies {
            let mut rng = streams::stream(
                seed,
                &[streams::tag("offline"), idx as u64, copy as u64],
            );
            let snr = rng.gen_range(snr_low_db..=snr_high_db);
            let noisy = add_awgn(&record.iq, snr, &mut rng)?;
            records.push(DatasetRecord {
                iq: noisy,
                label: record.label,
                sf: record.sf,
                record_seed: record.record_seed,
                profile_hash: record.profile_hash.clone(),
            });
        }
    }
    Ok(Dataset {
        population: dataset.population.clone(),
        profiles: dataset.profiles.clone(),
        sfs: dataset.sfs.clone(),
        n_per_device_per_sf: dataset.n_per_device_per_sf * copies,
        seed,
        bandwidth_hz: dataset.bandwidth_hz,
        sample_rate_hz: dataset.sample_rate_hz,
        records,
    })
}

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    population: PopulationSpec,
    profiles: Vec<DeviceProfile>,
    sfs: Vec<u32>,
    n_per_device_per_sf: usize,
    seed: u64,
    bandwidth_hz: f64,
    sample_rate_hz: f64,
    profile_hash: String,
    files: Vec<FileEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
struct FileEntry {
    device: u32,
    sf: u32,
    file: String,
    n_records: usize,
    samples_per_record: usize,
    /// Record seeds in file order.
    record_seeds: Vec<u64>,
}

/// Writes `manifest.json` plus one IQ file per (device, sf).
pub fn save_dataset(dataset: &Dataset, dir: &Path) -> Result<(), PipelineError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let hash = profile_hash(&dataset.profiles);
    let mut files = Vec::new();
    for profile in &dataset.profiles {
        for &sf in &dataset.sfs {
            let recs: Vec<&DatasetRecord> = dataset
                .records
                .iter()
                .filter(|r| r.label == profile.device_id && r.sf == sf)
                .collect();
            if recs.is_empty() {
                continue;
            }
            let name = format!("dev{:03}_sf{}.iq", profile.device_id, sf);
            let path = dir.join(&name);
            let mut bytes =
                Vec::with_capacity(recs.iter().map(|r| r.iq.len() * 8).sum::<usize>());
            for r in &recs {
                for s in r.iq.samples() {
                    bytes.extend_from_slice(&(s.re as f32).to_le_bytes());
                    bytes.extend_from_slice(&(s.im as f32).to_le_bytes());
                }
            }
            fs::write(&path, bytes).map_err(io_err(&path))?;
            files.push(FileEntry {
                device: profile.device_id,
                sf,
                file: name,
                n_records: recs.len(),
                samples_per_record: recs[0].iq.len(),
                record_seeds: recs.iter().map(|r| r.record_seed).collect(),
            });
        }
    }
    let manifest = Manifest {
        population: dataset.population.clone(),
        profiles: dataset.profiles.clone(),
        sfs: dataset.sfs.clone(),
        n_per_device_per_sf: dataset.n_per_device_per_sf,
        seed: dataset.seed,
        bandwidth_hz: dataset.bandwidth_hz,
        sample_rate_hz: dataset.sample_rate_hz,
        profile_hash: hash,
        files,
    };
    let path = dir.join("manifest.json");
    let json = serde_json::to_string_pretty(&manifest).map_err(json_err(&path))?;
    fs::write(&path, json).map_err(io_err(&path))?;
    Ok(())
}

/// Loads a dataset directory written by `save_dataset`.
pub fn load_dataset(dir: &Path) -> Result<Dataset, PipelineError> {
    let manifest_path = dir.join("manifest.json");
    let json = fs::read_to_string(&manifest_path).map_err(io_err(&manifest_path))?;
    let manifest: Manifest = serde_json::from_str(&json).map_err(json_err(&manifest_path))?;
    let mut records = Vec::new();
    for entry in &manifest.files {
        let path = dir.join(&entry.file);
        let bytes = fs::read(&path).map_err(io_err(&path))?;
        let expected = entry.n_records * entry.samples_per_record * 8;
        if bytes.len() != expected {
            return Err(PipelineError::BadDataset(format!(
                "{}: expected {} bytes, found {}",
                entry.file,
                expected,
                bytes.len()
            )));
        }
        if entry.record_seeds.len() != entry.n_records {
            return Err(PipelineError::BadDataset(format!(
                "{}: seed list length {} != record count {}",
                entry.file,
                entry.record_seeds.len(),
                entry.n_records
            )));
        }
        for (ri, chunk) in bytes
            .chunks_exact(entry.samples_per_record * 8)
            .enumerate()
        {
            let samples: Vec<Complex64> = chunk
                .chunks_exact(8)
                .map(|b| {
                    let re = f32::from_le_bytes(b[0..4].try_into().expect("4 bytes")) as f64;
                    let im = f32::from_le_bytes(b[4..8].try_into().expect("4 bytes")) as f64;
                    Complex64::new(re, im)
                })
                .collect();
            records.push(DatasetRecord {
                iq: ComplexSignal::new(samples, manifest.sample_rate_hz)?,
                label: entry.device,
                sf: entry.sf,
                record_seed: entry.record_seeds[ri],
                profile_hash: manifest.profile_hash.clone(),
            });
        }
    }
    Ok(Dataset {
        population: manifest.population,
        profiles: manifest.profiles,
        sfs: manifest.sfs,
        n_per_device_per_sf: manifest.n_per_device_per_sf,
        seed: manifest.seed,
        bandwidth_hz: manifest.bandwidth_hz,
        sample_rate_hz: manifest.sample_rate_hz,
        records,
    })
}

/// Checks that record lengths match the preamble length law for their SF.
pub fn validate_dataset(dataset: &Dataset) -> Result<(), PipelineError> {
    for (i, r) in dataset.records.iter().enumerate() {
        let config = dataset.lora_config(r.sf)?;
        let expect = samples_per_preamble(&config);
        if r.iq.len() != expect {
            return Err(PipelineError::BadDataset(format!(
                "record {i}: length {} != expected {expect} for SF {}",
                r.iq.len(),
                r.sf
            )));
        }
    }
    Ok(())
}
