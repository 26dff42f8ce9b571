//! Shared fixtures for the benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use trait_core::sampler::{generate_synthetic, SyntheticCorpus, SyntheticSpec};
use trait_core::EmbeddingTable;

/// A planted corpus of `docs` documents over 500 terms.
pub fn corpus(docs: usize, aspects: usize, seed: u64) -> SyntheticCorpus {
    let spec = SyntheticSpec::symmetric(docs, 4, 2, aspects, 500, 0.1, 1.0, 1.0);
    generate_synthetic(&spec, &mut ChaCha8Rng::seed_from_u64(seed)).expect("valid spec")
}

/// Sentence embeddings clustered by planted aspect; `dim` must exceed the
/// number of aspects.
pub fn sentence_embeddings(synth: &SyntheticCorpus, dim: usize, seed: u64) -> EmbeddingTable {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut table = EmbeddingTable::new(dim);
    for (i, &t) in synth.aspects.iter().enumerate() {
        let v: Vec<f32> = (0..dim)
            .map(|k| f32::from(u8::from(k == t)) + rng.random_range(-0.3f32..0.3))
            .collect();
        table
            .insert(synth.corpus.sentence_key(i), &v)
            .expect("dimension matches");
    }
    table
}

/// Word embeddings with random directions.
pub fn word_embeddings(synth: &SyntheticCorpus, dim: usize, seed: u64) -> EmbeddingTable {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut table = EmbeddingTable::new(dim);
    for term in synth.corpus.vocabulary().terms() {
        let v: Vec<f32> = (0..dim).map(|_| rng.random_range(-1.0f32..1.0)).collect();
        table.insert(term.clone(), &v).expect("dimension matches");
    }
    table
}
