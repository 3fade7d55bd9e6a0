//! Flat binary embedding store.
//!
//! Layout, all little-endian: magic `DCEM`, `u32` row count, `u32` dimension
//! (always 512), then `count × dim` `f32` values row-major. A video's
//! `embedding_ref` is its row index.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::EMBED_DIM;

const MAGIC: &[u8; 4] = b"DCEM";

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EmbeddingStore {
    count: usize,
    data: Vec<f32>,
}

impl EmbeddingStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends a row and returns its index.
    pub fn push(&mut self, row: &[f64]) -> Result<usize> {
        if row.len() != EMBED_DIM {
            return Err(Error::DimensionMismatch(format!("embedding of width {} (need {EMBED_DIM})", row.len())));
        }
        if row.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("embedding"));
        }
        self.data.extend(row.iter().map(|&x| x as f32));
        self.count += 1;
        Ok(self.count - 1)
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn get(&self, i: usize) -> Option<&[f32]> {
        (i < self.count).then(|| &self.data[i * EMBED_DIM..(i + 1) * EMBED_DIM])
    }

    /// Row `i` widened to `f64`.
    pub fn get_f64(&self, i: usize) -> Result<Vec<f64>> {
        self.get(i)
            .map(|r| r.iter().map(|&x| x as f64).collect())
            .ok_or(Error::DanglingEmbedding { reference: i, count: self.count })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(12 + self.data.len() * 4);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(self.count as u32).to_le_bytes());
        out.extend_from_slice(&(EMBED_DIM as u32).to_le_bytes());
        for x in &self.data {
            out.extend_from_slice(&x.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 12 || &bytes[..4] != MAGIC {
            return Err(Error::EmbeddingStore("missing DCEM header".into()));
        }
        let count = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
        let dim = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
        if dim != EMBED_DIM {
            return Err(Error::EmbeddingStore(format!("dimension {dim}, expected {EMBED_DIM}")));
        }
        let expected = 12 + count * dim * 4;
        if bytes.len() != expected {
            return Err(Error::EmbeddingStore(format!("{} bytes, expected {expected}", bytes.len())));
        }
        let data: Vec<f32> = bytes[12..]
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::EmbeddingStore("non-finite value".into()));
        }
        Ok(Self { count, data })
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_bytes(&fs::read(path)?)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut f = fs::File::create(path)?;
        f.write_all(&self.to_bytes())?;
        Ok(())
    }
}
