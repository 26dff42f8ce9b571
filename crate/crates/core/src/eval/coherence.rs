use serde::{Deserialize, Serialize};

use super::SMOOTHING;
use crate::corpus::Corpus;
use crate::graph::{cosine_similarity, EmbeddingTable};
use crate::WordId;

/// Topic scores are reported as mean NPMI times this factor.
pub const NPMI_SCALE: f64 = 100.0;

/// Document-level occurrence lists of a reference corpus.
#[derive(Debug, Clone)]
pub struct CooccurrenceIndex<'a> {
    corpus: &'a Corpus,
    /// Sorted document indices per word.
    postings: Vec<Vec<u32>>,
}

impl<'a> CooccurrenceIndex<'a> {
    pub fn new(corpus: &'a Corpus) -> Self {
        let mut postings = vec![Vec::new(); corpus.vocabulary().len()];
        for (d, doc) in corpus.documents().iter().enumerate() {
            for sentence in &doc.sentences {
                for &v in &sentence.tokens {
                    let list: &mut Vec<u32> = &mut postings[v as usize];
                    if list.last() != Some(&(d as u32)) {
                        list.push(d as u32);
                    }
                }
            }
        }
        CooccurrenceIndex { corpus, postings }
    }

    pub fn num_documents(&self) -> usize {
        self.corpus.num_documents()
    }

    fn id(&self, term: &str) -> Option<WordId> {
        self.corpus.vocabulary().id(term)
    }

    pub fn document_frequency(&self, term: &str) -> u32 {
        self.id(term).map_or(0, |v| self.postings[v as usize].len() as u32)
    }

    pub fn joint_frequency(&self, a: &str, b: &str) -> u32 {
        let (Some(a), Some(b)) = (self.id(a), self.id(b)) else {
            return 0;
        };
        let (x, y) = (&self.postings[a as usize], &self.postings[b as usize]);
        let (mut i, mut j, mut n) = (0, 0, 0);
        while i < x.len() && j < y.len() {
            match x[i].cmp(&y[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    n += 1;
                    i += 1;
                    j += 1;
                }
            }
        }
        n
    }
}

/// NPMI of two terms, clamped to [-1, 1]. `None` when either term never
/// occurs in the reference. A pair present in every document scores 1.
pub fn npmi_pair(index: &CooccurrenceIndex<'_>, a: &str, b: &str) -> Option<f64> {
    let (fa, fb) = (index.document_frequency(a), index.document_frequency(b));
    if fa == 0 || fb == 0 {
        return None;
    }
    let n = index.num_documents() as f64;
    let (pa, pb) = (fa as f64 / n, fb as f64 / n);
    let pab = index.joint_frequency(a, b) as f64 / n;
    let joint = pab + SMOOTHING;
    let denominator = -joint.ln();
    if denominator <= 0.0 {
        return Some(1.0);
    }
    Some(((joint / (pa * pb)).ln() / denominator).clamp(-1.0, 1.0))
}

/// Mean pairwise NPMI per topic, scaled by [`NPMI_SCALE`]. Pairs with an
/// unseen term are skipped; a topic with no scored pair gets `None`.
pub fn npmi_coherence(topics: &[Vec<String>], index: &CooccurrenceIndex<'_>) -> Vec<Option<f64>> {
    topics
        .iter()
        .map(|words| {
            let mut total = 0.0;
            let mut pairs = 0usize;
            for i in 0..words.len() {
                for j in i + 1..words.len() {
                    if let Some(x) = npmi_pair(index, &words[i], &words[j]) {
                        total += x;
                        pairs += 1;
                    }
                }
            }
            (pairs > 0).then(|| total / pairs as f64 * NPMI_SCALE)
        })
        .collect()
}

/// Mean pairwise cosine of each topic's embedded words; `None` with fewer
/// than two.
pub fn w2v_coherence(topics: &[Vec<String>], embeddings: &EmbeddingTable) -> Vec<Option<f64>> {
    topics
        .iter()
        .map(|words| {
            let vectors: Vec<&[f32]> = words.iter().filter_map(|w| embeddings.get(w)).collect();
            let mut total = 0.0;
            let mut pairs = 0usize;
            for i in 0..vectors.len() {
                for j in i + 1..vectors.len() {
                    // Stored vectors have finite non-zero norms.
                    total += cosine_similarity(vectors[i], vectors[j]).expect("validated embedding");
                    pairs += 1;
                }
            }
            (pairs > 0).then(|| total / pairs as f64)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicCoherence {
    pub sentiment: usize,
    pub aspect: usize,
    pub words: Vec<String>,
    pub npmi: Option<f64>,
    pub w2v: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoherenceReport {
    pub topics: Vec<TopicCoherence>,
    pub mean_npmi: Option<f64>,
    pub mean_w2v: Option<f64>,
}

fn mean_of(xs: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let present: Vec<f64> = xs.flatten().collect();
    (!present.is_empty()).then(|| present.iter().sum::<f64>() / present.len() as f64)
}

/// Scores topics indexed `s * num_aspects + t`.
pub fn coherence_report(
    topics: &[Vec<String>],
    num_aspects: usize,
    index: &CooccurrenceIndex<'_>,
    embeddings: Option<&EmbeddingTable>,
) -> CoherenceReport {
    let npmi = npmi_coherence(topics, index);
    let w2v = match embeddings {
        Some(e) => w2v_coherence(topics, e),
        None => vec![None; topics.len()],
    };
    let topics: Vec<TopicCoherence> = topics
        .iter()
        .enumerate()
        .map(|(k, words)| TopicCoherence {
            sentiment: k / num_aspects,
            aspect: k % num_aspects,
            words: words.clone(),
            npmi: npmi[k],
            w2v: w2v[k],
        })
        .collect();
    CoherenceReport {
        mean_npmi: mean_of(topics.iter().map(|t| t.npmi)),
        mean_w2v: mean_of(topics.iter().map(|t| t.w2v)),
        topics,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{CorpusBuilder, RawDocument};

    fn corpus(docs: &[&[&str]]) -> Corpus {
        let mut b = CorpusBuilder::new();
        for (i, words) in docs.iter().enumerate() {
            b.push(RawDocument {
                id: format!("d{i}"),
                attribute: "x".into(),
                rating: None,
                sentences: vec![words.iter().map(|w| w.to_string()).collect()],
            });
        }
        b.build().unwrap()
    }

    fn topic(words: &[&str]) -> Vec<String> {
        words.iter().map(|w| w.to_string()).collect()
    }

    #[test]
    fn frequencies_count_documents_not_tokens() {
        let c = corpus(&[&["a", "a", "b"], &["a"], &["c"]]);
        let idx = CooccurrenceIndex::new(&c);
        assert_eq!(idx.document_frequency("a"), 2);
        assert_eq!(idx.joint_frequency("a", "b"), 1);
        assert_eq!(idx.joint_frequency("a", "c"), 0);
        assert_eq!(idx.document_frequency("zzz"), 0);
    }

    #[test]
    fn perfect_association_and_independence() {
        let c = corpus(&[&["a", "b"], &["a", "b"], &["c"], &["c"]]);
        let idx = CooccurrenceIndex::new(&c);
        assert!((npmi_pair(&idx, "a", "b").unwrap() - 1.0).abs() < 1e-9);

        // p(a) = p(b) = 1/2, p(a, b) = 1/4.
        let c = corpus(&[&["a", "b"], &["a"], &["b"], &["c"]]);
        let idx = CooccurrenceIndex::new(&c);
        assert!(npmi_pair(&idx, "a", "b").unwrap().abs() < 1e-9);
        assert!(npmi_pair(&idx, "a", "c").unwrap() >= -1.0);
        assert_eq!(npmi_pair(&idx, "a", "missing"), None);
    }

    #[test]
    fn ubiquitous_pair_scores_one() {
        let c = corpus(&[&["a", "b"], &["a", "b"]]);
        assert_eq!(npmi_pair(&CooccurrenceIndex::new(&c), "a", "b"), Some(1.0));
    }

    #[test]
    fn topic_scores_skip_unknown_words_and_ignore_order() {
        let c = corpus(&[&["a", "b"], &["a", "c"], &["b", "c"], &["a", "b", "c"], &["d"]]);
        let idx = CooccurrenceIndex::new(&c);
        let scores = npmi_coherence(&[topic(&["a", "b", "c"]), topic(&["c", "a", "b"]), topic(&["a", "zz"])], &idx);
        assert!((scores[0].unwrap() - scores[1].unwrap()).abs() < 1e-12);
        assert_eq!(scores[2], None);
    }

    #[test]
    fn w2v_examples() {
        let mut e = EmbeddingTable::new(2);
        e.insert("a", &[1.0, 0.0]).unwrap();
        e.insert("b", &[0.0, 2.0]).unwrap();
        e.insert("c", &[3.0, 0.0]).unwrap();
        e.insert("d", &[1.0, 1.0]).unwrap();
        let s = w2v_coherence(&[topic(&["a", "c"]), topic(&["a", "b"]), topic(&["a", "q"]), topic(&["a", "b", "c", "d"])], &e);
        assert!((s[0].unwrap() - 1.0).abs() < 1e-12);
        assert!(s[1].unwrap().abs() < 1e-12);
        assert_eq!(s[2], None);
        // Pairs: ab 0, ac 1, ad r, bc 0, bd r, cd r with r = 1/sqrt 2.
        let want = (1.0 + 3.0 * std::f64::consts::FRAC_1_SQRT_2) / 6.0;
        assert!((s[3].unwrap() - want).abs() < 1e-12);
    }

    #[test]
    fn report_indexes_topics_by_sentiment_and_aspect() {
        let c = corpus(&[&["a", "b"], &["a", "c"]]);
        let idx = CooccurrenceIndex::new(&c);
        let r = coherence_report(&[topic(&["a", "b"]), topic(&["a", "c"]), topic(&["q"])], 2, &idx, None);
        assert_eq!((r.topics[2].sentiment, r.topics[2].aspect), (1, 0));
        assert_eq!(r.topics[2].npmi, None);
        assert!(r.mean_npmi.is_some());
        assert_eq!(r.mean_w2v, None);
    }
}
