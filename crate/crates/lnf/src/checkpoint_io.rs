//! Binary checkpoint container.
//!
//! Layout, all little-endian:
//!
//! ```text
//! magic    b"LNFC"
//! version  u32 (currently 1)
//! fingerprint u64        model-config hash
//! epoch    u64
//! val_oa   f64
//! val_macc f64
//! n_arrays u32
//! per array: name_len u32, name utf-8 bytes, value_count u32, f32 values
//! ```
//!
//! Parameter arrays appear in the model's declared flatten order and
//! round-trip bit-exactly.

use std::fs;
use std::io::{self, Read, Write};
use std::path::Path;

use lnf_core::network::ModelConfig;
use lnf_core::training::Checkpoint;
use thiserror::Error;

const MAGIC: &[u8; 4] = b"LNFC";
const VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("io error: {0}")]
    Io(#[from] io::Error),
    #[error("not a checkpoint file (bad magic)")]
    BadMagic,
    #[error("unsupported checkpoint version {0}")]
    BadVersion(u32),
    #[error("truncated checkpoint file")]
    Truncated,
    #[error("checkpoint shape mismatch: {0}")]
    Shape(String),
}

pub fn save_checkpoint(
    path: &Path,
    config: &ModelConfig,
    ckpt: &Checkpoint,
) -> Result<(), CheckpointError> {
    let mut rng = lnf_core::Rng::new(0);
    let model = lnf_core::network::ClassifierModel::init(config.clone(), &mut rng)
        .map_err(|e| CheckpointError::Shape(e.to_string()))?;
    let names = model.param_names();
    let shapes = model.param_shapes();
    let total: usize = shapes.iter().sum();
    if ckpt.params.len() != total {
        return Err(CheckpointError::Shape(format!(
            "checkpoint has {} parameters, config needs {total}",
            ckpt.params.len()
        )));
    }

    let mut buf: Vec<u8> = Vec::new();
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&ckpt.fingerprint.to_le_bytes());
    buf.extend_from_slice(&(ckpt.epoch as u64).to_le_bytes());
    buf.extend_from_slice(&ckpt.val_oa.to_le_bytes());
    buf.extend_from_slice(&ckpt.val_macc.to_le_bytes());
    buf.extend_from_slice(&(names.len() as u32).to_le_bytes());
    let mut off = 0;
    for (name, &len) in names.iter().zip(&shapes) {
        buf.extend_from_slice(&(name.len() as u32).to_le_bytes());
        buf.extend_from_slice(name.as_bytes());
        buf.extend_from_slice(&(len as u32).to_le_bytes());
        for &p in &ckpt.params[off..off + len] {
            buf.extend_from_slice(&(p as f32).to_le_bytes());
        }
        off += len;
    }

    let mut file = fs::File::create(path)?;
    file.write_all(&buf)?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint, CheckpointError> {
    let mut data = Vec::new();
    fs::File::open(path)?.read_to_end(&mut data)?;
    let mut cur = Cursor { data: &data, pos: 0 };

    if cur.take(4)? != MAGIC {
        return Err(CheckpointError::BadMagic);
    }
    let version = cur.u32()?;
    if version != VERSION {
        return Err(CheckpointError::BadVersion(version));
    }
    let fingerprint = cur.u64()?;
    let epoch = cur.u64()? as usize;
    let val_oa = cur.f64()?;
    let val_macc = cur.f64()?;
    let n_arrays = cur.u32()? as usize;

    let mut params = Vec::new();
    for _ in 0..n_arrays {
        let name_len = cur.u32()? as usize;
        cur.take(name_len)?; // names are layout documentation; order is authoritative
        let count = cur.u32()? as usize;
        for _ in 0..count {
            let bytes: [u8; 4] = cur.take(4)?.try_into().unwrap();
            params.push(f32::from_le_bytes(bytes) as f64);
        }
    }

    Ok(Checkpoint { params, epoch, val_oa, val_macc, fingerprint })
}

struct Cursor<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], CheckpointError> {
        if self.pos + n > self.data.len() {
            return Err(CheckpointError::Truncated);
        }
        let s = &self.data[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }
    fn u32(&mut self) -> Result<u32, CheckpointError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> Result<u64, CheckpointError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn f64(&mut self) -> Result<f64, CheckpointError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

/// Load every `*.lnfc` checkpoint in a directory, sorted by file name.
pub fn load_checkpoint_dir(dir: &Path) -> Result<Vec<Checkpoint>, CheckpointError> {
    let mut paths: Vec<_> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().map(|e| e == "lnfc").unwrap_or(false))
        .collect();
    paths.sort();
    paths.iter().map(|p| load_checkpoint(p)).collect()
}
