//! Writes deterministic stand-in embeddings for a corpus, so the pipeline can
//! run without a neural encoder.
//!
//! Every term gets a fixed pseudo-random vector derived from its SHA-256
//! digest. A word embedding is the sum of the vectors of the terms it shares
//! sentences with (counting itself twice), so words used in similar
//! sentences end up close. A sentence embedding is the mean of its words'
//! embeddings.
//!
//! Usage: `cargo run --example hash_embeddings -- <corpus.jsonl> <out_dir> [dim]`
//! writes `sentence_emb.trem` and `word_emb.trem` into `out_dir`.

use std::path::PathBuf;

use anyhow::{bail, Result};
use sha2::{Digest, Sha256};
use trait_core::corpus::{load_corpus, LoadOptions};
use trait_core::EmbeddingTable;

fn term_vector(term: &str, dim: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(dim);
    let mut block = 0u32;
    while out.len() < dim {
        let digest = Sha256::new().chain_update(term.as_bytes()).chain_update(block.to_le_bytes()).finalize();
        out.extend(digest.iter().map(|&b| (b as f64 - 127.5) / 127.5).take(dim - out.len()));
        block += 1;
    }
    out
}

fn as_f32(v: &[f64]) -> Vec<f32> {
    v.iter().map(|&x| x as f32).collect()
}

fn main() -> Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    if args.len() < 2 {
        bail!("usage: hash_embeddings <corpus.jsonl> <out_dir> [dim]");
    }
    let out_dir = PathBuf::from(&args[1]);
    let dim: usize = args.get(2).map(|d| d.parse()).transpose()?.unwrap_or(64);
    let corpus = load_corpus(&args[0], &LoadOptions::default())?;
    let terms = corpus.vocabulary().terms();
    let base: Vec<Vec<f64>> = terms.iter().map(|t| term_vector(t, dim)).collect();

    let mut word = vec![vec![0.0; dim]; terms.len()];
    for sentence in corpus.sentences() {
        for &v in &sentence.tokens {
            for &u in &sentence.tokens {
                let weight = if u == v { 2.0 } else { 1.0 };
                for (acc, x) in word[v as usize].iter_mut().zip(&base[u as usize]) {
                    *acc += weight * x;
                }
            }
        }
    }

    let mut words = EmbeddingTable::new(dim);
    for (term, v) in terms.iter().zip(&word) {
        words.insert(term.clone(), &as_f32(v))?;
    }

    let mut sentences = EmbeddingTable::new(dim);
    for (global, sentence) in corpus.sentences().enumerate() {
        let mut mean = vec![0.0; dim];
        for &v in &sentence.tokens {
            for (acc, x) in mean.iter_mut().zip(&word[v as usize]) {
                *acc += x / sentence.tokens.len() as f64;
            }
        }
        sentences.insert(corpus.sentence_key(global), &as_f32(&mean))?;
    }

    std::fs::create_dir_all(&out_dir)?;
    words.save(out_dir.join("word_emb.trem"))?;
    sentences.save(out_dir.join("sentence_emb.trem"))?;
    println!("{} word and {} sentence vectors of dimension {dim}", words.len(), sentences.len());
    Ok(())
}
