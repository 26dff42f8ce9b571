//! Attribute-conditioned aspect and sentiment discovery for opinionated text.
//!
//! The engine is organised as a pipeline of small modules:
//!
//! - [`corpus`]: text normalization, vocabulary and attribute indexing, JSONL I/O.
//! - [`graph`]: embedding tables, the per-attribute sentence correspondence graph
//!   and the related-word promotion table used by the generalized Pólya urn.
//! - [`sampler`]: collapsed Gibbs sampling over sentence-level (sentiment, aspect)
//!   assignments with an MRF correspondence bonus, plus checkpoints, fold-in and
//!   a synthetic-corpus generator.
//! - [`estimates`]: posterior point estimates and attribute profiles.
//! - [`eval`]: topic coherence, sentiment classification metrics and profile
//!   similarity.

pub mod corpus;
pub mod error;
pub mod estimates;
pub mod eval;
pub mod graph;
mod io_util;
pub mod sampler;

pub use corpus::{Corpus, Document, NormalizationConfig, Normalizer, Sentence, Vocabulary};
pub use error::{Error, Result};
pub use estimates::{AttributeProfile, PosteriorEstimates};
pub use graph::{CorrespondenceGraph, EmbeddingTable, PromotionTable};
pub use sampler::{Hyperparams, ModelState, SentimentLexicon};

/// Crate version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Index of a vocabulary term.
pub type WordId = u32;
