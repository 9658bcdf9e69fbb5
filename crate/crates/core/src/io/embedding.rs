//! `emb.dte`: per-detection appearance embeddings.
//!
//! Layout: magic `DTE1`, `u32` dimension, `u32` record count, then records
//! of `u32 frame`, `u32 det_index` and `dim` little-endian `f32` values.
//! Records are written in `(frame, det_index)` order.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"DTE1";
const UNIT_TOLERANCE: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingStore {
    dim: u32,
    records: BTreeMap<(u64, u32), Vec<f32>>,
}

impl EmbeddingStore {
    pub fn new(dim: u32) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("embedding dimension must be positive".into()));
        }
        Ok(Self {
            dim,
            records: BTreeMap::new(),
        })
    }

    pub fn dim(&self) -> u32 {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn insert(&mut self, frame: u64, det_index: u32, values: Vec<f32>) -> Result<()> {
        if values.len() != self.dim as usize {
            return Err(Error::Dimension(format!(
                "embedding has {} values, store dimension is {}",
                values.len(),
                self.dim
            )));
        }
        if frame == 0 || frame > u32::MAX as u64 {
            return Err(Error::InvalidArgument(format!("frame {frame} out of range")));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("embedding contains non-finite values".into()));
        }
        self.records.insert((frame, det_index), values);
        Ok(())
    }

    pub fn get(&self, key: (u64, u32)) -> Option<&[f32]> {
        self.records.get(&key).map(|v| v.as_slice())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(u64, u32), &Vec<f32>)> {
        self.records.iter()
    }
}

pub fn encode(store: &EmbeddingStore) -> Vec<u8> {
    let mut out = Vec::with_capacity(12 + store.len() * (8 + 4 * store.dim as usize));
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&store.dim.to_le_bytes());
    out.extend_from_slice(&(store.len() as u32).to_le_bytes());
    for (&(frame, det), vals) in &store.records {
        out.extend_from_slice(&(frame as u32).to_le_bytes());
        out.extend_from_slice(&det.to_le_bytes());
        for v in vals {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

struct Cursor<'a> {
    data: &'a [u8],
    pos: usize,
    source: &'a str,
}

impl Cursor<'_> {
    fn u32(&mut self, what: &str) -> Result<u32> {
        let bytes = self
            .data
            .get(self.pos..self.pos + 4)
            .ok_or_else(|| Error::binary(self.source, self.pos, format!("truncated while reading {what}")))?;
        self.pos += 4;
        Ok(u32::from_le_bytes(bytes.try_into().unwrap()))
    }
}

/// Decoded store plus the number of vectors that had to be renormalized.
#[derive(Debug, Clone, PartialEq)]
pub struct Decoded {
    pub store: EmbeddingStore,
    pub renormalized: usize,
}

pub fn decode(data: &[u8], source: &str) -> Result<Decoded> {
    if data.len() < 4 || &data[..4] != MAGIC {
        return Err(Error::binary(source, 0, "bad magic, expected DTE1"));
    }
    let mut cur = Cursor { data, pos: 4, source };
    let dim = cur.u32("dimension")?;
    if dim == 0 {
        return Err(Error::binary(source, 4, "dimension must be positive"));
    }
    let count = cur.u32("record count")?;
    let record_len = 8 + 4 * dim as usize;
    let expected = (count as usize)
        .checked_mul(record_len)
        .and_then(|n| n.checked_add(12))
        .ok_or_else(|| Error::binary(source, 8, "record count overflows"))?;
    if data.len() < expected {
        return Err(Error::binary(
            source,
            data.len(),
            format!("truncated: {count} records need {expected} bytes"),
        ));
    }
    if data.len() > expected {
        return Err(Error::binary(source, expected, "trailing bytes after last record"));
    }
    let mut store = EmbeddingStore::new(dim)?;
    let mut renormalized = 0;
    for _ in 0..count {
        let at = cur.pos;
        let frame = cur.u32("frame")? as u64;
        let det = cur.u32("detection index")?;
        if frame == 0 {
            return Err(Error::binary(source, at, "frame numbers start at 1"));
        }
        let mut vals: Vec<f32> = (0..dim)
            .map(|_| cur.u32("value").map(f32::from_bits))
            .collect::<Result<_>>()?;
        if vals.iter().any(|v| !v.is_finite()) {
            return Err(Error::binary(source, at, "non-finite embedding value"));
        }
        let norm = vals.iter().map(|&v| (v as f64) * (v as f64)).sum::<f64>().sqrt();
        if norm > 0.0 && (norm - 1.0).abs() > UNIT_TOLERANCE {
            for v in &mut vals {
                *v = (*v as f64 / norm) as f32;
            }
            renormalized += 1;
        }
        if store.records.insert((frame, det), vals).is_some() {
            return Err(Error::binary(
                source,
                at,
                format!("duplicate record for frame {frame}, detection {det}"),
            ));
        }
    }
    Ok(Decoded { store, renormalized })
}

pub fn read_embeddings(path: &Path) -> Result<Decoded> {
    decode(&super::read_bytes(path)?, &path.display().to_string())
}

pub fn write_embeddings(path: &Path, store: &EmbeddingStore) -> Result<()> {
    super::write_file(path, encode(store))
}
