//! Model checkpoints (`.pclm`).
//!
//! Layout, little-endian: the magic `"PCLM"`, one version byte, a u32 byte
//! length followed by a JSON header (`variant` plus the fusion config), a u32
//! section count, then one section per parameter: u16 name length, UTF-8
//! name, and the feature-cache matrix layout (rows u32, cols u32, row-major
//! f32 values). Parameters are stored at f32 precision.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{FusionConfig, FusionError, FusionNet, FusionVariant, Network};
use crate::ingest::IngestError;

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"PCLM";
const CHECKPOINT_VERSION: u8 = 1;

#[derive(Serialize, Deserialize)]
struct Header {
    variant: FusionVariant,
    config: FusionConfig,
}

fn err(message: impl Into<String>) -> FusionError {
    FusionError::Checkpoint(message.into())
}

pub fn write_checkpoint(model: &FusionNet) -> Vec<u8> {
    let header = serde_json::to_vec(&Header { variant: model.variant(), config: model.config().clone() })
        .expect("config serializes");
    let mut out = Vec::new();
    out.extend_from_slice(CHECKPOINT_MAGIC);
    out.push(CHECKPOINT_VERSION);
    out.extend_from_slice(&(header.len() as u32).to_le_bytes());
    out.extend_from_slice(&header);
    let shapes = model.parameter_shapes();
    out.extend_from_slice(&(shapes.len() as u32).to_le_bytes());
    for ((name, (rows, cols)), (_, values)) in shapes.into_iter().zip(model.parameters()) {
        out.extend_from_slice(&(name.len() as u16).to_le_bytes());
        out.extend_from_slice(name.as_bytes());
        crate::ingest::cache_write_matrix(&mut out, rows, cols, values.iter().map(|&v| v as f32));
    }
    out
}

fn take<'a>(bytes: &mut &'a [u8], n: usize, what: &str) -> Result<&'a [u8], FusionError> {
    if bytes.len() < n {
        return Err(err(format!("truncated {what}")));
    }
    let (head, tail) = bytes.split_at(n);
    *bytes = tail;
    Ok(head)
}

/// Decode a checkpoint. With `expected` set, a checkpoint built for any
/// other configuration is rejected.
pub fn read_checkpoint(mut bytes: &[u8], expected: Option<&FusionConfig>) -> Result<FusionNet, FusionError> {
    let magic = take(&mut bytes, 5, "header")?;
    if &magic[..4] != CHECKPOINT_MAGIC || magic[4] != CHECKPOINT_VERSION {
        return Err(err("not a PCLM v1 checkpoint"));
    }
    let len = u32::from_le_bytes(take(&mut bytes, 4, "header length")?.try_into().unwrap()) as usize;
    let header: Header =
        serde_json::from_slice(take(&mut bytes, len, "config record")?).map_err(|e| err(format!("config record: {e}")))?;
    if let Some(expected) = expected {
        if expected != &header.config {
            return Err(err("checkpoint configuration does not match the requested configuration"));
        }
    }
    let mut model = FusionNet::new(header.variant, header.config, 0)?;
    let shapes = model.parameter_shapes();
    let count = u32::from_le_bytes(take(&mut bytes, 4, "section count")?.try_into().unwrap()) as usize;
    if count != shapes.len() {
        return Err(err(format!("expected {} parameter sections, found {count}", shapes.len())));
    }
    let mut params = model.parameters_mut();
    for ((name, shape), (_, dst)) in shapes.iter().zip(params.iter_mut()) {
        let name_len = u16::from_le_bytes(take(&mut bytes, 2, "section name")?.try_into().unwrap()) as usize;
        let found = std::str::from_utf8(take(&mut bytes, name_len, "section name")?)
            .map_err(|_| err("section name is not UTF-8"))?;
        if found != name {
            return Err(err(format!("expected parameter {name}, found {found}")));
        }
        let matrix = crate::ingest::cache_read_matrix(&mut bytes, name).map_err(|e: IngestError| err(e.to_string()))?;
        if matrix.dim() != *shape {
            return Err(err(format!("parameter {name} has shape {:?}, expected {shape:?}", matrix.dim())));
        }
        for (d, s) in dst.iter_mut().zip(matrix.iter()) {
            *d = *s as f64;
        }
    }
    drop(params);
    if !bytes.is_empty() {
        return Err(err(format!("{} trailing bytes", bytes.len())));
    }
    Ok(model)
}

pub fn save_checkpoint(model: &FusionNet, path: impl AsRef<Path>) -> Result<(), FusionError> {
    crate::ingest::write_file_atomic(path.as_ref(), &write_checkpoint(model))
        .map_err(|e| err(format!("{}: {e}", path.as_ref().display())))
}

pub fn load_checkpoint(path: impl AsRef<Path>, expected: Option<&FusionConfig>) -> Result<FusionNet, FusionError> {
    let bytes = std::fs::read(path.as_ref()).map_err(|e| err(format!("{}: {e}", path.as_ref().display())))?;
    read_checkpoint(&bytes, expected)
}
