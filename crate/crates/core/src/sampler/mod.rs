//! Collapsed Gibbs inference over sentence-level `(sentiment, aspect)` pairs.
//!
//! Each sentence is resampled from the product of four factors: the aspect
//! share within its attribute value and sentiment, the sentiment share within
//! its document, the word likelihood under the sentiment-aspect word
//! distribution (with asymmetric lexicon priors), and an MRF bonus
//! `exp(lambda * agreeing / |neighbors|)` from the correspondence graph.
//! Word counts follow a generalized Pólya urn: every occurrence also adds
//! `epsilon` to each related word.

mod checkpoint;
mod counts;
mod foldin;
mod hyper;
mod state;
mod synth;
mod train;

use rand::Rng;

pub use checkpoint::{Checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use counts::CountTables;
pub use foldin::{fold_in, FoldInResult};
pub use hyper::{
    build_alpha, default_gamma, AlphaPrior, AlphaScheme, Hyperparams, SentimentLexicon, DEFAULT_BETA,
    DEFAULT_BURN_IN, DEFAULT_ITERATIONS, DEFAULT_LAMBDA, NEGATIVE, POSITIVE,
};
pub use state::{Assignment, Direction, ModelState, SweepStats, AUDIT_INTERVAL, DRIFT_TOLERANCE};
pub use synth::{generate_synthetic, sample_dirichlet, SyntheticCorpus, SyntheticSpec};
pub use train::{train, train_chains, SweepRecord, TrainingTrace};

use crate::error::{Error, Result};

/// Draws an index with probability proportional to its weight, consuming
/// exactly one uniform variate.
pub fn sample_assignment<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> Result<usize> {
    let mut total = 0.0;
    for &w in weights {
        if !(w >= 0.0) {
            return Err(Error::InvalidParameter(format!("negative or NaN weight {w}")));
        }
        total += w;
    }
    if !(total > 0.0 && total.is_finite()) {
        return Err(Error::ZeroMass);
    }
    let u = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last = 0;
    for (k, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            acc += w;
            last = k;
            if u < acc {
                return Ok(k);
            }
        }
    }
    Ok(last)
}
