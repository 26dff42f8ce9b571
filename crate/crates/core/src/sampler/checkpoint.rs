//! Binary model checkpoints.
//!
//! Layout (little-endian): magic `TRCK`, `version: u32`, hyperparameters,
//! sweep index, generator state (seed, stream, word position), corpus
//! fingerprint (document ids, vocabulary, attribute values), the assignment
//! and every count table. Strings are `u32` length-prefixed UTF-8.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::counts::CountTables;
use super::state::{check_assignment, check_inputs};
use super::{AlphaPrior, Assignment, Hyperparams, ModelState, DRIFT_TOLERANCE};
use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::graph::{CorrespondenceGraph, PromotionTable};
use crate::io_util::*;

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"TRCK";
pub const CHECKPOINT_VERSION: u32 = 1;

/// Everything needed to continue a chain bit-for-bit.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub hyper: Hyperparams,
    pub sweeps_done: u64,
    pub rng: ChaCha8Rng,
    pub document_ids: Vec<String>,
    pub vocabulary: Vec<String>,
    pub attributes: Vec<String>,
    pub assignment: Assignment,
    pub counts: CountTables,
}

impl<'a> ModelState<'a> {
    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            hyper: self.hyper.clone(),
            sweeps_done: self.sweeps_done,
            rng: self.rng.clone(),
            document_ids: self.corpus.documents().iter().map(|d| d.id.clone()).collect(),
            vocabulary: self.corpus.vocabulary().terms().to_vec(),
            attributes: self.corpus.attributes().values().to_vec(),
            assignment: self.assignment.clone(),
            counts: self.counts.clone(),
        }
    }

    /// Restores a chain. The stored counts are used as-is after checking
    /// them against a rebuild, so the continued chain matches an
    /// uninterrupted one exactly.
    pub fn resume(
        corpus: &'a Corpus,
        graph: &'a CorrespondenceGraph,
        promotion: &'a PromotionTable,
        checkpoint: Checkpoint,
    ) -> Result<Self> {
        let same = checkpoint.vocabulary.as_slice() == corpus.vocabulary().terms()
            && checkpoint.attributes.as_slice() == corpus.attributes().values()
            && checkpoint
                .document_ids
                .iter()
                .map(String::as_str)
                .eq(corpus.documents().iter().map(|d| d.id.as_str()));
        if !same {
            return Err(Error::Mismatch(
                "checkpoint was written for a different corpus".into(),
            ));
        }
        check_inputs(corpus, graph, promotion, &checkpoint.hyper)?;
        check_assignment(&checkpoint.assignment, corpus, &checkpoint.hyper)?;
        let mut state = ModelState::assemble(
            corpus,
            graph,
            promotion,
            checkpoint.hyper,
            checkpoint.assignment,
            checkpoint.rng,
        );
        let rebuilt = state.rebuild_counts();
        let drift = checkpoint.counts.max_abs_diff(&rebuilt);
        if drift > DRIFT_TOLERANCE {
            return Err(Error::Mismatch(format!(
                "checkpoint counts disagree with its assignment (drift {drift:e})"
            )));
        }
        state.counts = checkpoint.counts;
        state.sweeps_done = checkpoint.sweeps_done;
        Ok(state)
    }
}

impl Checkpoint {
    pub fn write_to<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        let h = &self.hyper;
        w.write_all(CHECKPOINT_MAGIC)?;
        write_u32(w, CHECKPOINT_VERSION)?;
        write_u32(w, h.num_sentiments as u32)?;
        write_u32(w, h.num_aspects as u32)?;
        write_u64(w, h.alpha.vocab_size() as u64)?;
        for &x in h.alpha.values() {
            write_f64(w, x)?;
        }
        for &x in h.beta.iter().chain(&h.gamma) {
            write_f64(w, x)?;
        }
        write_f64(w, h.lambda)?;
        write_f64(w, h.epsilon)?;
        write_u64(w, h.iterations as u64)?;
        write_u64(w, h.burn_in as u64)?;
        write_u64(w, h.seed)?;
        write_u64(w, self.sweeps_done)?;

        w.write_all(&self.rng.get_seed())?;
        write_u64(w, self.rng.get_stream())?;
        write_u128(w, self.rng.get_word_pos())?;

        for list in [&self.document_ids, &self.vocabulary, &self.attributes] {
            write_u64(w, list.len() as u64)?;
            for s in list.iter() {
                write_str(w, s)?;
            }
        }

        write_u64(w, self.assignment.len() as u64)?;
        for (&s, &t) in self.assignment.sentiments().iter().zip(self.assignment.aspects()) {
            write_u16(w, s)?;
            write_u16(w, t)?;
        }

        let c = &self.counts;
        write_u64(w, c.num_attributes as u64)?;
        write_u64(w, c.num_documents as u64)?;
        for &x in c.word.iter().chain(&c.word_total) {
            write_f64(w, x)?;
        }
        for &x in c.aspect.iter().chain(&c.aspect_total).chain(&c.sent).chain(&c.sent_total) {
            write_u32(w, x)?;
        }
        Ok(())
    }

    pub fn read_from<R: Read>(r: &mut R) -> Result<Self> {
        let bad = |m: String| Error::format("checkpoint", m);
        let io = |e: std::io::Error| bad(format!("truncated or unreadable: {e}"));
        let magic: [u8; 4] = read_array(r).map_err(io)?;
        if &magic != CHECKPOINT_MAGIC {
            return Err(bad(format!("bad magic {magic:?}")));
        }
        let version = read_u32(r).map_err(io)?;
        if version != CHECKPOINT_VERSION {
            return Err(bad(format!("unsupported version {version}")));
        }
        let ns = read_u32(r).map_err(io)? as usize;
        let nt = read_u32(r).map_err(io)? as usize;
        let nw = read_u64(r).map_err(io)? as usize;
        let sane = |n: usize, what: &str| {
            if n > 1 << 32 {
                Err(bad(format!("implausible {what} {n}")))
            } else {
                Ok(n)
            }
        };
        sane(ns * nw, "alpha size")?;
        let f64s = |r: &mut R, n: usize| -> Result<Vec<f64>> {
            (0..n).map(|_| read_f64(r).map_err(io)).collect()
        };
        let u32s = |r: &mut R, n: usize| -> Result<Vec<u32>> {
            (0..n).map(|_| read_u32(r).map_err(io)).collect()
        };
        let alpha = AlphaPrior::from_values(ns, nw, f64s(r, ns * nw)?)?;
        let beta = f64s(r, ns)?;
        let gamma = f64s(r, nt)?;
        let lambda = read_f64(r).map_err(io)?;
        let epsilon = read_f64(r).map_err(io)?;
        let iterations = read_u64(r).map_err(io)? as usize;
        let burn_in = read_u64(r).map_err(io)? as usize;
        let seed = read_u64(r).map_err(io)?;
        let sweeps_done = read_u64(r).map_err(io)?;
        let hyper = Hyperparams {
            num_sentiments: ns,
            num_aspects: nt,
            alpha,
            beta,
            gamma,
            lambda,
            epsilon,
            iterations,
            burn_in,
            seed,
        };

        let rng_seed: [u8; 32] = read_array(r).map_err(io)?;
        let mut rng = ChaCha8Rng::from_seed(rng_seed);
        rng.set_stream(read_u64(r).map_err(io)?);
        rng.set_word_pos(read_u128(r).map_err(io)?);

        let mut lists = Vec::with_capacity(3);
        for what in ["document count", "vocabulary size", "attribute count"] {
            let n = sane(read_u64(r).map_err(io)? as usize, what)?;
            let list: Vec<String> = (0..n)
                .map(|_| read_str(r).map_err(io))
                .collect::<Result<_>>()?;
            lists.push(list);
        }
        let attributes = lists.pop().unwrap_or_default();
        let vocabulary = lists.pop().unwrap_or_default();
        let document_ids = lists.pop().unwrap_or_default();
        if vocabulary.len() != nw {
            return Err(bad(format!("alpha covers {nw} terms but the vocabulary has {}", vocabulary.len())));
        }

        let n = sane(read_u64(r).map_err(io)? as usize, "sentence count")?;
        let mut sentiment = Vec::with_capacity(n);
        let mut aspect = Vec::with_capacity(n);
        for _ in 0..n {
            sentiment.push(read_u16(r).map_err(io)?);
            aspect.push(read_u16(r).map_err(io)?);
        }
        let assignment = Assignment::new(sentiment, aspect)?;

        let na = sane(read_u64(r).map_err(io)? as usize, "attribute count")?;
        let nd = sane(read_u64(r).map_err(io)? as usize, "document count")?;
        if na != attributes.len() || nd != document_ids.len() {
            return Err(bad("count table shape disagrees with the stored corpus fingerprint".into()));
        }
        let mut counts = CountTables::zeros(ns, nt, na, nw, nd);
        counts.word = f64s(r, ns * nt * nw)?;
        counts.word_total = f64s(r, ns * nt)?;
        counts.aspect = u32s(r, ns * na * nt)?;
        counts.aspect_total = u32s(r, ns * na)?;
        counts.sent = u32s(r, nd * ns)?;
        counts.sent_total = u32s(r, nd)?;

        let mut trailing = [0u8; 1];
        if r.read(&mut trailing).map_err(io)? != 0 {
            return Err(bad("trailing bytes".into()));
        }
        Ok(Checkpoint {
            hyper,
            sweeps_done,
            rng,
            document_ids,
            vocabulary,
            attributes,
            assignment,
            counts,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        self.write_to(&mut w)
            .and_then(|_| w.flush())
            .map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_from(&mut BufReader::new(file))
    }
}
