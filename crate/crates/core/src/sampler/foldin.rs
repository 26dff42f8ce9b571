use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::state::{sentence_layouts, CellInputs};
use super::{sample_assignment, ModelState};
use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::graph::PromotionTable;

/// Held-out inference output.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldInResult {
    /// Per test document sentiment distribution.
    pub theta: Vec<Vec<f64>>,
    pub sentiments: Vec<u16>,
    pub aspects: Vec<u16>,
}

/// Infers `(s, t)` for the sentences of `test` with the trained word and
/// aspect counts frozen; only the test documents' sentiment counts evolve.
/// No correspondence bonus is applied. `test` must share the trained
/// vocabulary ids and use known attribute values.
pub fn fold_in(trained: &ModelState<'_>, test: &Corpus, sweeps: usize, seed: u64) -> Result<FoldInResult> {
    let train_corpus = trained.corpus();
    if test.vocabulary().terms() != train_corpus.vocabulary().terms() {
        return Err(Error::Mismatch(
            "held-out corpus must use the training vocabulary".into(),
        ));
    }
    let attribute_map: Vec<usize> = test
        .attributes()
        .values()
        .iter()
        .map(|v| {
            train_corpus
                .attributes()
                .id(v)
                .ok_or_else(|| Error::Mismatch(format!("attribute value {v:?} was not seen in training")))
        })
        .collect::<Result<_>>()?;

    let hyper = trained.hyper();
    let (ns, nt) = (hyper.num_sentiments, hyper.num_aspects);
    let beta_sum: f64 = hyper.beta.iter().sum();
    let gamma_sum: f64 = hyper.gamma.iter().sum();
    let layout = sentence_layouts(test, &PromotionTable::empty(test.vocabulary().len()));
    let bonus = vec![1.0; nt];

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sent = vec![0u32; test.num_documents() * ns];
    let mut sent_total = vec![0u32; test.num_documents()];
    let mut sentiments = Vec::with_capacity(layout.len());
    let mut aspects = Vec::with_capacity(layout.len());
    for l in &layout {
        let s = rng.random_range(0..ns);
        sentiments.push(s as u16);
        aspects.push(rng.random_range(0..nt) as u16);
        sent[l.doc * ns + s] += 1;
        sent_total[l.doc] += 1;
    }

    let mut buf = vec![0.0; ns * nt];
    for _ in 0..sweeps {
        for (i, l) in layout.iter().enumerate() {
            let d = l.doc;
            sent[d * ns + sentiments[i] as usize] -= 1;
            sent_total[d] -= 1;
            CellInputs {
                counts: trained.counts(),
                hyper,
                beta_sum,
                gamma_sum,
                sent_row: &sent[d * ns..(d + 1) * ns],
                sent_total: sent_total[d],
                attribute: attribute_map[l.attribute],
                words: &l.words,
                len: l.len,
                bonus: &bonus,
            }
            .fill(&mut buf);
            let k = sample_assignment(&buf, &mut rng)?;
            sentiments[i] = (k / nt) as u16;
            aspects[i] = (k % nt) as u16;
            sent[d * ns + k / nt] += 1;
            sent_total[d] += 1;
        }
    }

    let theta = (0..test.num_documents())
        .map(|d| {
            let den = sent_total[d] as f64 + beta_sum;
            (0..ns).map(|s| (sent[d * ns + s] as f64 + hyper.beta[s]) / den).collect()
        })
        .collect();
    Ok(FoldInResult {
        theta,
        sentiments,
        aspects,
    })
}
