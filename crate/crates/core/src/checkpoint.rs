//! `DCW1` weight files.
//!
//! ```text
//! "DCW1"  u32 kind  u32 meta_len  meta (UTF-8 JSON)  u32 n_tensors
//! n_tensors × { u32 rows  u32 cols  rows·cols × f64 }
//! ```
//!
//! All integers and floats little-endian.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::DenseMatrix;
use crate::optim::Parameters;

pub const MAGIC: &[u8; 4] = b"DCW1";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u32)]
pub enum CheckpointKind {
    Projection = 1,
    MilModel = 2,
}

impl CheckpointKind {
    fn from_u32(v: u32) -> Result<Self> {
        match v {
            1 => Ok(Self::Projection),
            2 => Ok(Self::MilModel),
            _ => Err(Error::Checkpoint(format!("unknown kind {v}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub kind: CheckpointKind,
    pub meta: serde_json::Value,
    pub tensors: Vec<DenseMatrix>,
}

impl Checkpoint {
    pub fn from_params<M: Serialize, P: Parameters>(kind: CheckpointKind, meta: &M, params: &P) -> Result<Self> {
        Ok(Self {
            kind,
            meta: serde_json::to_value(meta)?,
            tensors: params.tensors().into_iter().cloned().collect(),
        })
    }

    pub fn meta_as<M: DeserializeOwned>(&self) -> Result<M> {
        serde_json::from_value(self.meta.clone()).map_err(|e| Error::Checkpoint(format!("metadata: {e}")))
    }

    /// Copies tensors into `params`, which must have matching shapes.
    pub fn load_into<P: Parameters>(&self, params: &mut P) -> Result<()> {
        let mut dst = params.tensors_mut();
        if dst.len() != self.tensors.len() {
            return Err(Error::Checkpoint(format!(
                "expected {} tensors, file has {}",
                dst.len(),
                self.tensors.len()
            )));
        }
        for (i, (d, s)) in dst.iter_mut().zip(&self.tensors).enumerate() {
            if d.shape() != s.shape() {
                return Err(Error::Checkpoint(format!("tensor {i}: shape {:?} vs {:?}", s.shape(), d.shape())));
            }
            d.data_mut().copy_from_slice(s.data());
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let meta = serde_json::to_vec(&self.meta).expect("json value serializes");
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(self.kind as u32).to_le_bytes());
        out.extend_from_slice(&(meta.len() as u32).to_le_bytes());
        out.extend_from_slice(&meta);
        out.extend_from_slice(&(self.tensors.len() as u32).to_le_bytes());
        for t in &self.tensors {
            out.extend_from_slice(&(t.rows() as u32).to_le_bytes());
            out.extend_from_slice(&(t.cols() as u32).to_le_bytes());
            for x in t.data() {
                out.extend_from_slice(&x.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(4)? != MAGIC {
            return Err(Error::Checkpoint("bad magic".into()));
        }
        let kind = CheckpointKind::from_u32(r.u32()?)?;
        let meta_len = r.u32()? as usize;
        let meta = serde_json::from_slice(r.take(meta_len)?)
            .map_err(|e| Error::Checkpoint(format!("metadata: {e}")))?;
        let n = r.u32()? as usize;
        let mut tensors = Vec::with_capacity(n.min(1024));
        for _ in 0..n {
            let rows = r.u32()? as usize;
            let cols = r.u32()? as usize;
            let len = rows
                .checked_mul(cols)
                .and_then(|k| k.checked_mul(8))
                .ok_or_else(|| Error::Checkpoint("tensor too large".into()))?;
            let raw = r.take(len)?;
            let data = raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
            tensors.push(DenseMatrix::new(rows, cols, data).map_err(|e| Error::Checkpoint(e.to_string()))?);
        }
        if r.pos != bytes.len() {
            return Err(Error::Checkpoint("trailing bytes".into()));
        }
        Ok(Self { kind, meta, tensors })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path)?)
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| Error::Checkpoint("truncated file".into()))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
}
