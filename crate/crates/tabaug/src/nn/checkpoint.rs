//! Sized, versioned checkpoint files: a JSON metadata header plus a
//! key→shape→values tensor table with little-endian f64 payloads.
//!
//! Round-trips are bit-exact: tensor bytes are raw IEEE 754, and the JSON
//! header carries only structure (tags, specs, vocabularies).

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::nn::matrix::Matrix;
use crate::nn::params::ParamStore;

const MAGIC: &[u8; 8] = b"TABCKPT\x01";
const VERSION: u32 = 1;

#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub meta: serde_json::Value,
    pub tensors: BTreeMap<String, Matrix>,
}

impl Checkpoint {
    pub fn new(meta: serde_json::Value) -> Self {
        Self { meta, tensors: BTreeMap::new() }
    }

    pub fn insert(&mut self, name: impl Into<String>, tensor: Matrix) {
        self.tensors.insert(name.into(), tensor);
    }

    pub fn tensor(&self, name: &str) -> Result<&Matrix> {
        self.tensors
            .get(name)
            .ok_or_else(|| Error::Checkpoint(format!("missing tensor {name:?}")))
    }

    /// Add every tensor of a parameter store under `prefix.`.
    pub fn insert_store(&mut self, prefix: &str, store: &ParamStore) {
        for (name, tensor) in store.tensors() {
            self.tensors.insert(format!("{prefix}.{name}"), tensor.clone());
        }
    }

    /// Rebuild a parameter store from every tensor under `prefix.`.
    pub fn extract_store(&self, prefix: &str) -> ParamStore {
        let mut store = ParamStore::new();
        let full = format!("{prefix}.");
        for (name, tensor) in &self.tensors {
            if let Some(stripped) = name.strip_prefix(&full) {
                store.insert(stripped, tensor.clone());
            }
        }
        store
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let meta_bytes = serde_json::to_vec(&self.meta)
            .map_err(|e| Error::Checkpoint(format!("meta encode: {e}")))?;
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(meta_bytes.len() as u64).to_le_bytes());
        out.extend_from_slice(&meta_bytes);
        out.extend_from_slice(&(self.tensors.len() as u64).to_le_bytes());
        for (name, tensor) in &self.tensors {
            let name_bytes = name.as_bytes();
            out.extend_from_slice(&(name_bytes.len() as u32).to_le_bytes());
            out.extend_from_slice(name_bytes);
            out.extend_from_slice(&(tensor.rows as u64).to_le_bytes());
            out.extend_from_slice(&(tensor.cols as u64).to_le_bytes());
            for v in &tensor.data {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        let mut file = std::fs::File::create(path)?;
        file.write_all(&out)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut bytes = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut bytes)?;
        let mut cursor = Cursor { bytes: &bytes, pos: 0 };

        let magic = cursor.take(8)?;
        if magic != MAGIC {
            return Err(Error::Checkpoint("bad magic".into()));
        }
        let version = u32::from_le_bytes(cursor.take(4)?.try_into().unwrap());
        if version != VERSION {
            return Err(Error::Checkpoint(format!("unsupported version {version}")));
        }
        let meta_len = cursor.take_u64()? as usize;
        let meta: serde_json::Value = serde_json::from_slice(cursor.take(meta_len)?)
            .map_err(|e| Error::Checkpoint(format!("meta decode: {e}")))?;
        let count = cursor.take_u64()? as usize;
        let mut tensors = BTreeMap::new();
        for _ in 0..count {
            let name_len = u32::from_le_bytes(cursor.take(4)?.try_into().unwrap()) as usize;
            let name = String::from_utf8(cursor.take(name_len)?.to_vec())
                .map_err(|_| Error::Checkpoint("tensor name is not UTF-8".into()))?;
            let rows = cursor.take_u64()? as usize;
            let cols = cursor.take_u64()? as usize;
            let mut data = Vec::with_capacity(rows * cols);
            for _ in 0..rows * cols {
                data.push(f64::from_le_bytes(cursor.take(8)?.try_into().unwrap()));
            }
            tensors.insert(name, Matrix::from_vec(rows, cols, data));
        }
        if cursor.pos != bytes.len() {
            return Err(Error::Checkpoint("trailing bytes after tensor table".into()));
        }
        Ok(Self { meta, tensors })
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(Error::Checkpoint("truncated file".into()));
        }
        let out = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn take_u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}
