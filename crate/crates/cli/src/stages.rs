//! Stage implementations shared by the subcommands and the pipeline.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use log::info;
use serde::Serialize;
use trait_core::corpus::{load_corpus, partition_by_attribute, CorpusFormat, LoadOptions};
use trait_core::estimates::{build_profiles, AttributeProfile};
use trait_core::eval::{
    baseline_matrix, coherence_report, evaluate_classification, ground_truth_labels, profile_distance_matrix,
    CoherenceReport, CooccurrenceIndex,
};
use trait_core::graph::{build_correspondence_graph, build_promotion_table};
use trait_core::sampler::{build_alpha, Checkpoint, SweepRecord};
use trait_core::{
    Corpus, CorrespondenceGraph, EmbeddingTable, Hyperparams, ModelState, NormalizationConfig, Normalizer,
    PosteriorEstimates, PromotionTable, SentimentLexicon,
};

use crate::config::ModelConfig;

/// Normalizes a raw (or pre-tokenized) corpus.
pub fn preprocess(input: &Path, normalization: &NormalizationConfig) -> Result<Corpus> {
    let options = LoadOptions {
        format: CorpusFormat::Auto,
        normalization: normalization.clone(),
    };
    Ok(load_corpus(input, &options)?)
}

/// Loads a corpus already in pre-tokenized form.
pub fn load_tokenized(path: &Path) -> Result<Corpus> {
    let options = LoadOptions {
        format: CorpusFormat::Tokenized,
        normalization: NormalizationConfig::default(),
    };
    load_corpus(path, &options).with_context(|| format!("loading corpus {}", path.display()))
}

/// The correspondence graph, or an edgeless one without sentence embeddings.
pub fn build_graph(corpus: &Corpus, sentence_embeddings: Option<&Path>, rho: f64) -> Result<CorrespondenceGraph> {
    let Some(path) = sentence_embeddings else {
        return Ok(CorrespondenceGraph::empty(corpus.num_sentences()));
    };
    let emb = EmbeddingTable::load(path)?;
    let graph = build_correspondence_graph(&emb, corpus, &partition_by_attribute(corpus), rho)?;
    info!(
        "graph: {} sentences, {} edges at rho {rho}",
        graph.num_sentences(),
        graph.num_edges()
    );
    Ok(graph)
}

pub fn build_promotions(corpus: &Corpus, word_embeddings: Option<&Path>, model: &ModelConfig) -> Result<PromotionTable> {
    let w = corpus.vocabulary().len();
    match word_embeddings {
        Some(path) if model.epsilon > 0.0 => {
            let emb = EmbeddingTable::load(path)?;
            let table = build_promotion_table(
                &emb,
                corpus.vocabulary(),
                model.epsilon,
                model.promotion_threshold,
                model.promotion_top_k,
            )?;
            info!("promotion: {} related-word pairs", table.num_pairs());
            Ok(table)
        }
        _ => Ok(PromotionTable::empty(w)),
    }
}

pub fn hyperparams(
    model: &ModelConfig,
    corpus: &Corpus,
    normalization: &NormalizationConfig,
    seed: u64,
) -> Result<Hyperparams> {
    let normalizer = Normalizer::new(normalization.clone())?;
    let lexicon = SentimentLexicon::default_stemmed(&normalizer)?;
    let alpha = build_alpha(&lexicon, corpus.vocabulary(), model.sentiments, model.alpha_scheme())?;
    let mut h = Hyperparams::new(model.sentiments, model.aspects, alpha);
    h.beta = vec![model.beta; model.sentiments];
    h.gamma = vec![model.gamma(); model.aspects];
    h.lambda = model.lambda;
    h.epsilon = model.epsilon;
    h.iterations = model.iterations;
    h.burn_in = model.burn_in;
    h.seed = seed;
    h.validate(corpus.vocabulary().len())?;
    Ok(h)
}

/// Runs a chain from `start` (fresh or resumed) to completion, logging every
/// `log_interval` sweeps.
pub fn run_chain(mut state: ModelState<'_>, log_interval: usize, label: &str) -> Result<(Checkpoint, Vec<SweepRecord>)> {
    let total = state.hyper().total_sweeps();
    let trace = state.run(|_, r| {
        if log_interval > 0 && r.sweep % log_interval as u64 == 0 {
            info!("{label}sweep {}/{total}: log-joint {:.3}, {} changed", r.sweep, r.log_joint, r.changed);
        }
        Ok(())
    })?;
    Ok((state.checkpoint(), trace.sweeps))
}

pub fn write_trace(path: &Path, chains: &[Vec<SweepRecord>]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
    writeln!(w, "chain\tsweep\tchanged\tlog_joint")?;
    for (c, records) in chains.iter().enumerate() {
        for r in records {
            writeln!(w, "{c}\t{}\t{}\t{}", r.sweep, r.changed, r.log_joint)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

pub fn profiles(estimates: &PosteriorEstimates, top_k: usize) -> Vec<AttributeProfile> {
    build_profiles(estimates, top_k)
}

pub fn coherence(
    estimates: &PosteriorEstimates,
    reference: &Corpus,
    word_embeddings: Option<&Path>,
    top_n: usize,
) -> Result<CoherenceReport> {
    let emb = word_embeddings.map(EmbeddingTable::load).transpose()?;
    let index = CooccurrenceIndex::new(reference);
    Ok(coherence_report(&estimates.topics(top_n), estimates.num_aspects, &index, emb.as_ref()))
}

/// Aligns θ rows with the corpus documents by id.
pub fn classification(estimates: &PosteriorEstimates, corpus: &Corpus) -> Result<serde_json::Value> {
    if estimates.num_sentiments != 2 {
        bail!("classification needs exactly two sentiments");
    }
    let truth = ground_truth_labels(corpus);
    let by_id: std::collections::HashMap<&str, usize> = estimates
        .document_ids
        .iter()
        .enumerate()
        .map(|(i, id)| (id.as_str(), i))
        .collect();
    let mut theta = Vec::with_capacity(corpus.num_documents());
    for doc in corpus.documents() {
        let Some(&i) = by_id.get(doc.id.as_str()) else {
            bail!("document {:?} has no estimate", doc.id);
        };
        theta.push(estimates.theta[i].clone());
    }
    let report = evaluate_classification(&theta, &truth.labels)?;
    Ok(serde_json::to_value(report)?)
}

/// Writes the profile distance matrix as JSON and TSV.
pub fn similarity(profiles: &[AttributeProfile], json: &Path, tsv: &Path) -> Result<()> {
    let matrix = profile_distance_matrix(profiles)?;
    write_json(json, &matrix)?;
    std::fs::write(tsv, matrix.to_tsv()).with_context(|| format!("writing {}", tsv.display()))
}

pub fn baseline(corpus: &Corpus, sentence_embeddings: &Path, out: &Path) -> Result<()> {
    let emb = EmbeddingTable::load(sentence_embeddings)?;
    write_json(out, &baseline_matrix(corpus, &emb)?)
}
