//! Checkpoint format: a little-endian u32 header length, a JSON header
//! (model spec, training metadata, parameter names and shapes), then each
//! parameter's values as raw little-endian f32 arrays in header order.

use crate::error::ModelError;
use crate::net::{build_model, Model};
use crate::spec::{ModelSpec, TrainingMeta};
use serde::{Deserialize, Serialize};
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    spec: ModelSpec,
    meta: TrainingMeta,
    params: Vec<ParamEntry>,
}

#[derive(Debug, Serialize, Deserialize, PartialEq, Eq)]
struct ParamEntry {
    name: String,
    shape: Vec<usize>,
}

pub fn write_checkpoint<W: Write>(model: &Model<f32>, mut w: W) -> Result<(), ModelError> {
    let header = Header {
        spec: model.spec.clone(),
        meta: model.meta.clone(),
        params: model
            .params
            .iter()
            .map(|p| ParamEntry {
                name: p.name.clone(),
                shape: p.shape.clone(),
            })
            .collect(),
    };
    let json = serde_json::to_vec(&header).map_err(|e| ModelError::Header(e.to_string()))?;
    w.write_all(&(json.len() as u32).to_le_bytes())?;
    w.write_all(&json)?;
    for p in model.params.iter() {
        for v in p.value.iter() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_checkpoint<R: Read>(mut r: R) -> Result<Model<f32>, ModelError> {
    let mut len_buf = [0u8; 4];
    r.read_exact(&mut len_buf)?;
    let header_len = u32::from_le_bytes(len_buf) as usize;
    let mut json = vec![0u8; header_len];
    r.read_exact(&mut json)?;
    let header: Header =
        serde_json::from_slice(&json).map_err(|e| ModelError::Header(e.to_string()))?;

    let mut model: Model<f32> = build_model(&header.spec, 0)?;
    model.meta = header.meta.clone();
    if model.params.len() != header.params.len() {
        return Err(ModelError::ParamMismatch(format!(
            "expected {} parameters, header lists {}",
            model.params.len(),
            header.params.len()
        )));
    }
    for (i, entry) in header.params.iter().enumerate() {
        let pid = rffi_tensornet::ParamId(i);
        {
            let p = model.params.get(pid);
            if p.name != entry.name || p.shape != entry.shape {
                return Err(ModelError::ParamMismatch(format!(
                    "parameter {i}: expected {} {:?}, header has {} {:?}",
                    p.name, p.shape, entry.name, entry.shape
                )));
            }
        }
        let n = entry.shape.iter().product::<usize>();
        let mut bytes = vec![0u8; n * 4];
        r.read_exact(&mut bytes)?;
        let values = model.params.values_mut(pid);
        for (k, chunk) in bytes.chunks_exact(4).enumerate() {
            values[k] = f32::from_le_bytes(chunk.try_into().expect("4-byte chunk"));
        }
    }
    Ok(model)
}

pub fn save_checkpoint(model: &Model<f32>, path: &Path) -> Result<(), ModelError> {
    let file = File::create(path)?;
    let mut w = BufWriter::new(file);
    write_checkpoint(model, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<Model<f32>, ModelError> {
    let file = File::open(path)?;
    read_checkpoint(BufReader::new(file))
}
