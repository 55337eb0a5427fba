//! Binary checkpoint: `MAGIC`, a little-endian u64 header length, a JSON
//! header, then the parameters as little-endian f64.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::NeuralModel;
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"TSNN0001";

#[derive(Serialize, Deserialize)]
struct Header {
    #[serde(flatten)]
    model: NeuralModel,
    param_count: usize,
}

pub fn save_model(model: &NeuralModel, path: &Path) -> Result<()> {
    let header = serde_json::to_vec(&Header {
        model: model.clone(),
        param_count: model.params.len(),
    })?;
    let mut buf = Vec::with_capacity(16 + header.len() + 8 * model.params.len());
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&(header.len() as u64).to_le_bytes());
    buf.extend_from_slice(&header);
    for p in &model.params {
        buf.extend_from_slice(&p.to_le_bytes());
    }
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: &Path) -> Result<NeuralModel> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let bad = |msg: &str| Error::config(format!("{}: {msg}", path.display()));
    if bytes.len() < 16 || &bytes[..8] != MAGIC {
        return Err(bad("not a network checkpoint"));
    }
    let len = u64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes")) as usize;
    let body = bytes
        .get(16..16usize.saturating_add(len))
        .ok_or_else(|| bad("truncated header"))?;
    let header: Header = serde_json::from_slice(body)?;
    let raw = &bytes[16 + len..];
    let expected = header.model.network.param_count();
    if header.param_count != expected || raw.len() != 8 * expected {
        return Err(Error::Dimension {
            expected,
            got: raw.len() / 8,
        });
    }
    let mut model = header.model;
    model.params = raw
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    Ok(model)
}
