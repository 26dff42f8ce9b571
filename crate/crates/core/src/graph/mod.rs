//! Sentence correspondence graph and related-word promotion.
//!
//! Sentences of documents sharing an attribute value are linked when the
//! cosine similarity of their embeddings strictly exceeds a threshold `rho`.
//! The resulting neighbor sets drive the MRF bonus in the sampler.

mod embedding;
mod promotion;

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rayon::prelude::*;

pub use embedding::{EmbeddingTable, TREM_MAGIC, TREM_VERSION};
pub use promotion::{build_promotion_table, PromotionTable, DEFAULT_PROMOTION_THRESHOLD, DEFAULT_PROMOTION_TOP_K};

use crate::corpus::{AttributePartition, Corpus};
use crate::error::{Error, Result};
use crate::io_util::*;

/// Default similarity threshold for correspondence edges.
pub const DEFAULT_RHO: f64 = 0.7;

const BLOCK: usize = 64;

pub(crate) fn dot<T: Copy + Into<f64>>(u: &[T], v: &[T]) -> f64 {
    u.iter().zip(v).map(|(&a, &b)| a.into() * b.into()).sum()
}

pub(crate) fn norm<T: Copy + Into<f64>>(u: &[T]) -> f64 {
    dot(u, u).sqrt()
}

fn cosine_with_norms<T: Copy + Into<f64>>(u: &[T], v: &[T], nu: f64, nv: f64) -> f64 {
    (dot(u, v) / (nu * nv)).clamp(-1.0, 1.0)
}

/// Cosine similarity, accumulated in double precision.
pub fn cosine_similarity<T: Copy + Into<f64>>(u: &[T], v: &[T]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch {
            expected: u.len(),
            actual: v.len(),
        });
    }
    let (nu, nv) = (norm(u), norm(v));
    if !(nu.is_finite() && nu > 0.0 && nv.is_finite() && nv > 0.0) {
        return Err(Error::DegenerateVector { key: None });
    }
    Ok(cosine_with_norms(u, v, nu, nv))
}

/// Symmetric sentence adjacency (no self-loops), indexed by global sentence index.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrespondenceGraph {
    rho: f64,
    offsets: Vec<usize>,
    neighbors: Vec<u32>,
}

impl CorrespondenceGraph {
    /// A graph with no edges over `num_sentences` sentences.
    pub fn empty(num_sentences: usize) -> Self {
        CorrespondenceGraph {
            rho: 1.0,
            offsets: vec![0; num_sentences + 1],
            neighbors: Vec::new(),
        }
    }

    /// Builds a graph from an undirected edge list. Duplicate edges collapse;
    /// self-loops are rejected.
    pub fn from_edges(num_sentences: usize, rho: f64, edges: &[(usize, usize)]) -> Result<Self> {
        let mut lists = vec![Vec::new(); num_sentences];
        for &(i, j) in edges {
            if i == j {
                return Err(Error::InvalidParameter(format!("self-loop on sentence {i}")));
            }
            if i >= num_sentences || j >= num_sentences {
                return Err(Error::InvalidParameter(format!(
                    "edge ({i}, {j}) out of range for {num_sentences} sentences"
                )));
            }
            lists[i].push(j as u32);
            lists[j].push(i as u32);
        }
        Ok(Self::from_lists(rho, lists))
    }

    fn from_lists(rho: f64, mut lists: Vec<Vec<u32>>) -> Self {
        let mut offsets = Vec::with_capacity(lists.len() + 1);
        let mut neighbors = Vec::new();
        offsets.push(0);
        for list in &mut lists {
            list.sort_unstable();
            list.dedup();
            neighbors.extend_from_slice(list);
            offsets.push(neighbors.len());
        }
        CorrespondenceGraph {
            rho,
            offsets,
            neighbors,
        }
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn num_sentences(&self) -> usize {
        self.offsets.len() - 1
    }

    /// Number of undirected edges.
    pub fn num_edges(&self) -> usize {
        self.neighbors.len() / 2
    }

    /// Neighbors of sentence `i`, ascending.
    pub fn neighbors(&self, i: usize) -> &[u32] {
        &self.neighbors[self.offsets[i]..self.offsets[i + 1]]
    }

    /// Undirected edges `(i, j)` with `i < j`, in ascending order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        (0..self.num_sentences())
            .flat_map(|i| {
                self.neighbors(i)
                    .iter()
                    .filter(move |&&j| (j as usize) > i)
                    .map(move |&j| (i, j as usize))
            })
            .collect()
    }

    pub fn write_to<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        w.write_all(GRAPH_MAGIC)?;
        write_u32(w, GRAPH_VERSION)?;
        write_f64(w, self.rho)?;
        write_u64(w, self.num_sentences() as u64)?;
        for i in 0..self.num_sentences() {
            let list = self.neighbors(i);
            write_u32(w, list.len() as u32)?;
            for &j in list {
                write_u32(w, j)?;
            }
        }
        Ok(())
    }

    pub fn read_from<R: Read>(r: &mut R) -> Result<Self> {
        let bad = |m: String| Error::format("graph", m);
        let io = |e: std::io::Error| bad(format!("truncated or unreadable: {e}"));
        let magic: [u8; 4] = read_array(r).map_err(io)?;
        if &magic != GRAPH_MAGIC {
            return Err(bad(format!("bad magic {magic:?}")));
        }
        let version = read_u32(r).map_err(io)?;
        if version != GRAPH_VERSION {
            return Err(bad(format!("unsupported version {version}")));
        }
        let rho = read_f64(r).map_err(io)?;
        let n = read_u64(r).map_err(io)? as usize;
        let mut lists = Vec::with_capacity(n);
        for _ in 0..n {
            let deg = read_u32(r).map_err(io)? as usize;
            let mut list = Vec::with_capacity(deg);
            for _ in 0..deg {
                list.push(read_u32(r).map_err(io)?);
            }
            lists.push(list);
        }
        let graph = Self::from_lists(rho, lists);
        graph.check_structure()?;
        Ok(graph)
    }

    /// Verifies symmetry, range and the absence of self-loops.
    pub fn check_structure(&self) -> Result<()> {
        let n = self.num_sentences();
        for i in 0..n {
            for &j in self.neighbors(i) {
                let j = j as usize;
                if j >= n || j == i || self.neighbors(j).binary_search(&(i as u32)).is_err() {
                    return Err(Error::format(
                        "graph",
                        format!("edge ({i}, {j}) is out of range, a self-loop, or one-directional"),
                    ));
                }
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

const GRAPH_MAGIC: &[u8; 4] = b"TRGR";
const GRAPH_VERSION: u32 = 1;

/// Links every pair of distinct sentences within a partition whose embedding
/// cosine similarity is strictly greater than `rho`.
///
/// Exact all-pairs search, blocked and parallel across row blocks.
pub fn build_correspondence_graph(
    embeddings: &EmbeddingTable,
    corpus: &Corpus,
    partitions: &[AttributePartition],
    rho: f64,
) -> Result<CorrespondenceGraph> {
    if !(-1.0..=1.0).contains(&rho) {
        return Err(Error::InvalidParameter(format!("rho must lie in [-1, 1], got {rho}")));
    }
    let mut lists: Vec<Vec<u32>> = vec![Vec::new(); corpus.num_sentences()];
    for part in partitions {
        let mut rows = Vec::with_capacity(part.sentences.len());
        for &s in &part.sentences {
            let key = corpus.sentence_key(s);
            let v = embeddings.get(&key).ok_or(Error::MissingEmbedding(key))?;
            if v.len() != embeddings.dimension() {
                return Err(Error::DimensionMismatch {
                    expected: embeddings.dimension(),
                    actual: v.len(),
                });
            }
            rows.push((s, v, norm(v)));
        }

        let n = rows.len();
        let edges: Vec<(usize, usize)> = (0..n.div_ceil(BLOCK))
            .into_par_iter()
            .flat_map_iter(|bi| {
                let rows = &rows;
                let lo = bi * BLOCK;
                let hi = (lo + BLOCK).min(n);
                let mut found = Vec::new();
                for cj in (lo..n).step_by(BLOCK) {
                    let chi = (cj + BLOCK).min(n);
                    for i in lo..hi {
                        let (si, vi, ni) = rows[i];
                        for &(sj, vj, nj) in &rows[cj.max(i + 1)..chi] {
                            if cosine_with_norms(vi, vj, ni, nj) > rho {
                                found.push((si, sj));
                            }
                        }
                    }
                }
                found
            })
            .collect();
        for (i, j) in edges {
            lists[i].push(j as u32);
            lists[j].push(i as u32);
        }
    }
    Ok(CorrespondenceGraph::from_lists(rho, lists))
}
