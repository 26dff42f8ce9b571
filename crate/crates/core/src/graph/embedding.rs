//! Dense embedding tables and the TREM binary format.
//!
//! Layout (little-endian): magic `TREM`, `version: u32`, `count: u64`,
//! `dim: u32`, then per record `key_len: u16`, UTF-8 key bytes and
//! `dim` × `f32`.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::norm;
use crate::error::{Error, Result};
use crate::io_util::*;

pub const TREM_MAGIC: &[u8; 4] = b"TREM";
pub const TREM_VERSION: u32 = 1;

/// Keyed vectors of identical dimension, each with finite non-zero norm.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    keys: Vec<String>,
    data: Vec<f32>,
    index: HashMap<String, usize>,
}

impl EmbeddingTable {
    pub fn new(dim: usize) -> Self {
        EmbeddingTable {
            dim,
            keys: Vec::new(),
            data: Vec::new(),
            index: HashMap::new(),
        }
    }

    pub fn dimension(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn insert(&mut self, key: impl Into<String>, vector: &[f32]) -> Result<()> {
        let key = key.into();
        if vector.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: vector.len(),
            });
        }
        let n = norm(vector);
        if !n.is_finite() || n <= 0.0 {
            return Err(Error::DegenerateVector { key: Some(key) });
        }
        if key.len() > u16::MAX as usize {
            return Err(Error::InvalidParameter(format!("key too long: {} bytes", key.len())));
        }
        if self.index.contains_key(&key) {
            return Err(Error::InvalidParameter(format!("duplicate embedding key {key:?}")));
        }
        self.index.insert(key.clone(), self.keys.len());
        self.keys.push(key);
        self.data.extend_from_slice(vector);
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&[f32]> {
        self.index.get(key).map(|&i| self.row(i))
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn keys(&self) -> &[String] {
        &self.keys
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f32])> {
        self.keys.iter().enumerate().map(|(i, k)| (k.as_str(), self.row(i)))
    }

    pub fn read_from<R: Read>(r: &mut R) -> Result<Self> {
        let bad = |m: String| Error::format("embedding", m);
        let io = |e: std::io::Error| bad(format!("truncated or unreadable: {e}"));
        let magic: [u8; 4] = read_array(r).map_err(io)?;
        if &magic != TREM_MAGIC {
            return Err(bad(format!("bad magic {magic:?}")));
        }
        let version = read_u32(r).map_err(io)?;
        if version != TREM_VERSION {
            return Err(bad(format!("unsupported version {version}")));
        }
        let count = read_u64(r).map_err(io)?;
        let dim = read_u32(r).map_err(io)? as usize;
        if count > 0 && dim == 0 {
            return Err(bad("zero dimension".into()));
        }
        let mut table = EmbeddingTable::new(dim);
        let mut vector = vec![0f32; dim];
        for _ in 0..count {
            let len = read_u16(r).map_err(io)? as usize;
            let mut key = vec![0u8; len];
            r.read_exact(&mut key).map_err(io)?;
            let key = String::from_utf8(key).map_err(|e| bad(format!("key is not UTF-8: {e}")))?;
            for x in vector.iter_mut() {
                *x = read_f32(r).map_err(io)?;
            }
            table.insert(key, &vector)?;
        }
        let mut trailing = [0u8; 1];
        if r.read(&mut trailing).map_err(io)? != 0 {
            return Err(bad("trailing bytes after last record".into()));
        }
        Ok(table)
    }

    pub fn write_to<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        w.write_all(TREM_MAGIC)?;
        write_u32(w, TREM_VERSION)?;
        write_u64(w, self.keys.len() as u64)?;
        write_u32(w, self.dim as u32)?;
        for (key, v) in self.iter() {
            write_u16(w, key.len() as u16)?;
            w.write_all(key.as_bytes())?;
            for x in v {
                w.write_all(&x.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_from(&mut BufReader::new(file))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        self.write_to(&mut w)
            .and_then(|_| w.flush())
            .map_err(|e| Error::io(path, e))
    }
}
