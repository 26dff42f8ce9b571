use rayon::prelude::*;

use super::{cosine_with_norms, norm, EmbeddingTable};
use crate::corpus::Vocabulary;
use crate::error::{Error, Result};
use crate::WordId;

pub const DEFAULT_PROMOTION_THRESHOLD: f64 = 0.5;
pub const DEFAULT_PROMOTION_TOP_K: usize = 10;

/// Related words per vocabulary term, each carrying the urn promotion weight.
///
/// Relations are directional: `v → u` is stored when `u` ranks among the
/// top-k neighbors of `v`, independently of `u`'s own ranking.
#[derive(Debug, Clone, PartialEq)]
pub struct PromotionTable {
    related: Vec<Vec<(WordId, f64)>>,
}

impl PromotionTable {
    /// No promotions for a vocabulary of `vocab_size` terms.
    pub fn empty(vocab_size: usize) -> Self {
        PromotionTable {
            related: vec![Vec::new(); vocab_size],
        }
    }

    /// Builds a table from explicit lists, indexed by vocabulary id.
    pub fn from_lists(related: Vec<Vec<(WordId, f64)>>) -> Result<Self> {
        let w = related.len();
        for (v, list) in related.iter().enumerate() {
            for &(u, weight) in list {
                if u as usize >= w || u as usize == v {
                    return Err(Error::InvalidParameter(format!("bad promotion {v} -> {u}")));
                }
                if !(weight > 0.0 && weight <= 1.0) {
                    return Err(Error::InvalidParameter(format!(
                        "promotion weight must lie in (0, 1], got {weight}"
                    )));
                }
            }
        }
        Ok(PromotionTable { related })
    }

    pub fn vocab_size(&self) -> usize {
        self.related.len()
    }

    pub fn related(&self, v: WordId) -> &[(WordId, f64)] {
        &self.related[v as usize]
    }

    pub fn is_empty(&self) -> bool {
        self.related.iter().all(|l| l.is_empty())
    }

    pub fn num_pairs(&self) -> usize {
        self.related.iter().map(|l| l.len()).sum()
    }
}

/// For each vocabulary term with an embedding, keeps up to `top_k` other
/// terms whose cosine similarity is at least `threshold`, ranked by
/// similarity (ties by id), each with weight `epsilon`.
pub fn build_promotion_table(
    word_embeddings: &EmbeddingTable,
    vocabulary: &Vocabulary,
    epsilon: f64,
    threshold: f64,
    top_k: usize,
) -> Result<PromotionTable> {
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::InvalidParameter(format!("epsilon must lie in (0, 1], got {epsilon}")));
    }
    if !(-1.0..=1.0).contains(&threshold) {
        return Err(Error::InvalidParameter(format!(
            "promotion threshold must lie in [-1, 1], got {threshold}"
        )));
    }
    if top_k == 0 {
        return Err(Error::InvalidParameter("top_k must be at least 1".into()));
    }
    let embedded: Vec<(WordId, &[f32], f64)> = (0..vocabulary.len() as WordId)
        .filter_map(|v| {
            word_embeddings
                .get(vocabulary.term(v))
                .map(|vec| (v, vec, norm(vec)))
        })
        .collect();

    let mut related = vec![Vec::new(); vocabulary.len()];
    let lists: Vec<(WordId, Vec<(WordId, f64)>)> = embedded
        .par_iter()
        .map(|&(v, vec, nv)| {
            let mut candidates: Vec<(WordId, f64)> = embedded
                .iter()
                .filter(|&&(u, _, _)| u != v)
                .map(|&(u, other, nu)| (u, cosine_with_norms(vec, other, nv, nu)))
                .filter(|&(_, cos)| cos >= threshold)
                .collect();
            candidates.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
            candidates.truncate(top_k);
            (v, candidates.into_iter().map(|(u, _)| (u, epsilon)).collect())
        })
        .collect();
    for (v, list) in lists {
        related[v as usize] = list;
    }
    Ok(PromotionTable { related })
}
