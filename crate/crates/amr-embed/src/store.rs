//! Id-addressed vector store with a compact binary form: f32 little-endian
//! on disk, f64 in memory. The header carries the producing config hash and
//! seed so downstream stages can refuse mismatched artifacts (hash 0 marks
//! externally produced vectors).

use std::collections::HashMap;

use thiserror::Error;

const MAGIC: &[u8; 4] = b"AMRV";
const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("vector store: {0}")]
    Format(String),
    #[error("vector store version {found} is not supported")]
    Version { found: u32 },
    #[error("duplicate id `{0}`")]
    DuplicateId(String),
    #[error("vector has dimension {found}, store holds {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct VectorStore {
    dim: usize,
    ids: Vec<String>,
    index: HashMap<String, usize>,
    /// Row-major, len = ids.len() * dim.
    data: Vec<f64>,
    pub config_hash: u64,
    pub seed: u64,
}

impl VectorStore {
    pub fn new(dim: usize, config_hash: u64, seed: u64) -> Self {
        VectorStore { dim, ids: Vec::new(), index: HashMap::new(), data: Vec::new(), config_hash, seed }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn push(&mut self, id: &str, vector: &[f64]) -> Result<(), StoreError> {
        if vector.len() != self.dim {
            return Err(StoreError::DimensionMismatch { expected: self.dim, found: vector.len() });
        }
        if self.index.contains_key(id) {
            return Err(StoreError::DuplicateId(id.to_string()));
        }
        self.index.insert(id.to_string(), self.ids.len());
        self.ids.push(id.to_string());
        self.data.extend_from_slice(vector);
        Ok(())
    }

    pub fn get(&self, id: &str) -> Option<&[f64]> {
        self.index.get(id).map(|&i| self.row(i))
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    /// Serialize; vector entries are narrowed to f32.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(36 + self.data.len() * 4);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.ids.len() as u32).to_le_bytes());
        out.extend_from_slice(&(self.dim as u32).to_le_bytes());
        out.extend_from_slice(&self.config_hash.to_le_bytes());
        out.extend_from_slice(&self.seed.to_le_bytes());
        for id in &self.ids {
            out.extend_from_slice(&(id.len() as u32).to_le_bytes());
            out.extend_from_slice(id.as_bytes());
        }
        for v in &self.data {
            out.extend_from_slice(&(*v as f32).to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, StoreError> {
        let mut pos = 0usize;
        let take = |pos: &mut usize, n: usize| -> Result<&[u8], StoreError> {
            let end = pos
                .checked_add(n)
                .filter(|e| *e <= bytes.len())
                .ok_or_else(|| StoreError::Format("file truncated".into()))?;
            let s = &bytes[*pos..end];
            *pos = end;
            Ok(s)
        };
        if take(&mut pos, 4)? != MAGIC {
            return Err(StoreError::Format("bad magic, not a vector store".into()));
        }
        let u32_at = |pos: &mut usize| -> Result<u32, StoreError> {
            Ok(u32::from_le_bytes(take(pos, 4)?.try_into().unwrap()))
        };
        let version = u32_at(&mut pos)?;
        if version != FORMAT_VERSION {
            return Err(StoreError::Version { found: version });
        }
        let count = u32_at(&mut pos)? as usize;
        let dim = u32_at(&mut pos)? as usize;
        let config_hash = u64::from_le_bytes(take(&mut pos, 8)?.try_into().unwrap());
        let seed = u64::from_le_bytes(take(&mut pos, 8)?.try_into().unwrap());

        let mut ids = Vec::with_capacity(count);
        let mut index = HashMap::with_capacity(count);
        for _ in 0..count {
            let len = u32_at(&mut pos)? as usize;
            let id = std::str::from_utf8(take(&mut pos, len)?)
                .map_err(|_| StoreError::Format("id is not UTF-8".into()))?
                .to_string();
            if index.insert(id.clone(), ids.len()).is_some() {
                return Err(StoreError::DuplicateId(id));
            }
            ids.push(id);
        }
        let mut data = Vec::with_capacity(count * dim);
        for _ in 0..count * dim {
            let v = f32::from_le_bytes(take(&mut pos, 4)?.try_into().unwrap());
            if !v.is_finite() {
                return Err(StoreError::Format("non-finite vector entry".into()));
            }
            data.push(v as f64);
        }
        if pos != bytes.len() {
            return Err(StoreError::Format("trailing bytes after payload".into()));
        }
        Ok(VectorStore { dim, ids, index, data, config_hash, seed })
    }
}
