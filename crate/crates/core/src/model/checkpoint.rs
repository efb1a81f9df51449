//! Parameter container.
//!
//! Layout (little endian):
//!
//! ```text
//! magic      8 bytes  "MTRSCKPT"
//! version    u32      1
//! header     u32 length + UTF-8 text, one `key=value` per line
//! count      u32      number of tensors
//! tensor     u32 name length + name, u32 rank, u64 per dimension,
//!            then row-major f32 values
//! ```
//!
//! The header always carries the model configuration; callers may add their
//! own keys (vocabulary fingerprint, training variant, ...).

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::Array2;

use super::{ModelConfig, ModelError, ModelParams};

const MAGIC: &[u8; 8] = b"MTRSCKPT";
const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub params: ModelParams,
    /// Extra header entries beyond the model configuration.
    pub metadata: BTreeMap<String, String>,
}

fn config_entries(c: &ModelConfig) -> Vec<(&'static str, String)> {
    vec![
        ("model.vocab_size", c.vocab_size.to_string()),
        ("model.hidden", c.hidden.to_string()),
        ("model.layers", c.layers.to_string()),
        ("model.heads", c.heads.to_string()),
        ("model.ffn", c.ffn.to_string()),
        ("model.max_positions", c.max_positions.to_string()),
        ("model.dropout", c.dropout.to_string()),
        ("model.classes", c.classes.to_string()),
    ]
}

pub fn write_checkpoint(path: impl AsRef<Path>, params: &ModelParams, metadata: &BTreeMap<String, String>) -> Result<(), ModelError> {
    let mut w = BufWriter::new(File::create(path)?);
    write_to(&mut w, params, metadata)?;
    w.flush()?;
    Ok(())
}

pub(crate) fn write_to<W: Write>(w: &mut W, params: &ModelParams, metadata: &BTreeMap<String, String>) -> Result<(), ModelError> {
    let mut header = String::new();
    for (k, v) in config_entries(&params.config) {
        header.push_str(&format!("{k}={v}\n"));
    }
    for (k, v) in metadata {
        if k.starts_with("model.") || k.contains(['=', '\n']) || v.contains('\n') {
            return Err(ModelError::Checkpoint(format!("invalid metadata key {k:?}")));
        }
        header.push_str(&format!("{k}={v}\n"));
    }
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(header.len() as u32).to_le_bytes())?;
    w.write_all(header.as_bytes())?;
    let named = params.named_tensors();
    w.write_all(&(named.len() as u32).to_le_bytes())?;
    for (name, t) in named {
        w.write_all(&(name.len() as u32).to_le_bytes())?;
        w.write_all(name.as_bytes())?;
        w.write_all(&2u32.to_le_bytes())?;
        w.write_all(&(t.nrows() as u64).to_le_bytes())?;
        w.write_all(&(t.ncols() as u64).to_le_bytes())?;
        for v in t.iter() {
            w.write_all(&(*v as f32).to_le_bytes())?;
        }
    }
    Ok(())
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32, ModelError> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64, ModelError> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_string<R: Read>(r: &mut R, len: usize) -> Result<String, ModelError> {
    let mut b = vec![0u8; len];
    r.read_exact(&mut b)?;
    String::from_utf8(b).map_err(|_| ModelError::Checkpoint("non UTF-8 text".into()))
}

pub fn read_checkpoint(path: impl AsRef<Path>) -> Result<Checkpoint, ModelError> {
    read_from(&mut BufReader::new(File::open(path)?))
}

pub(crate) fn read_from<R: Read>(r: &mut R) -> Result<Checkpoint, ModelError> {
    let bad = |m: String| ModelError::Checkpoint(m);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(bad("not a checkpoint file".into()));
    }
    let version = read_u32(r)?;
    if version != VERSION {
        return Err(bad(format!("unsupported version {version}")));
    }
    let header_len = read_u32(r)? as usize;
    let header = read_string(r, header_len)?;
    let mut entries = BTreeMap::new();
    for line in header.lines() {
        let (k, v) = line.split_once('=').ok_or_else(|| bad(format!("bad header line {line:?}")))?;
        entries.insert(k.to_string(), v.to_string());
    }
    let get = |k: &str| -> Result<String, ModelError> {
        entries.get(k).cloned().ok_or_else(|| bad(format!("missing header key {k}")))
    };
    let num = |k: &str| -> Result<usize, ModelError> {
        get(k)?.parse().map_err(|_| bad(format!("bad value for {k}")))
    };
    let config = ModelConfig {
        vocab_size: num("model.vocab_size")?,
        hidden: num("model.hidden")?,
        layers: num("model.layers")?,
        heads: num("model.heads")?,
        ffn: num("model.ffn")?,
        max_positions: num("model.max_positions")?,
        dropout: get("model.dropout")?.parse().map_err(|_| bad("bad dropout".into()))?,
        classes: num("model.classes")?,
    };
    config.validate()?;

    let mut params = ModelParams::init(&config, 0)?;
    let names = params.tensor_names();
    let count = read_u32(r)? as usize;
    if count != names.len() {
        return Err(bad(format!("expected {} tensors, found {count}", names.len())));
    }
    for (expected, slot) in names.iter().zip(params.tensors_mut()) {
        let name_len = read_u32(r)? as usize;
        let name = read_string(r, name_len)?;
        if &name != expected {
            return Err(bad(format!("expected tensor {expected}, found {name}")));
        }
        if read_u32(r)? != 2 {
            return Err(bad(format!("tensor {name} is not rank 2")));
        }
        let rows = read_u64(r)? as usize;
        let cols = read_u64(r)? as usize;
        if (rows, cols) != slot.dim() {
            return Err(bad(format!("tensor {name} has shape {rows}x{cols}, expected {:?}", slot.dim())));
        }
        let mut buf = vec![0u8; rows * cols * 4];
        r.read_exact(&mut buf)?;
        let values: Vec<f64> = buf
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
            .collect();
        *slot = Array2::from_shape_vec((rows, cols), values).expect("shape checked");
    }
    let mut trailing = [0u8; 1];
    if r.read(&mut trailing)? != 0 {
        return Err(bad("trailing bytes after last tensor".into()));
    }
    let metadata = entries.into_iter().filter(|(k, _)| !k.starts_with("model.")).collect();
    Ok(Checkpoint { params, metadata })
}
