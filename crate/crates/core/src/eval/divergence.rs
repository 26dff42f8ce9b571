use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::SMOOTHING;
use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::estimates::AttributeProfile;
use crate::graph::{cosine_similarity, EmbeddingTable};

fn smoothed(p: &[f64]) -> Result<Vec<f64>> {
    if p.iter().any(|&x| !(x >= 0.0 && x.is_finite())) {
        return Err(Error::InvalidParameter("probabilities must be finite and non-negative".into()));
    }
    let total: f64 = p.iter().map(|x| x + SMOOTHING).sum();
    Ok(p.iter().map(|x| (x + SMOOTHING) / total).collect())
}

fn check_pair(p: &[f64], q: &[f64]) -> Result<()> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch {
            expected: p.len(),
            actual: q.len(),
        });
    }
    if p.is_empty() {
        return Err(Error::InvalidParameter("distributions must be non-empty".into()));
    }
    Ok(())
}

fn kl_raw(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .filter(|(&a, _)| a > 0.0)
        .map(|(&a, &b)| a * (a / b).log2())
        .sum()
}

/// KL divergence in bits after smoothing both inputs.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> Result<f64> {
    check_pair(p, q)?;
    Ok(kl_raw(&smoothed(p)?, &smoothed(q)?).max(0.0))
}

/// Square root of the base-2 Jensen-Shannon divergence, in [0, 1].
pub fn js_distance(p: &[f64], q: &[f64]) -> Result<f64> {
    check_pair(p, q)?;
    let (p, q) = (smoothed(p)?, smoothed(q)?);
    let m: Vec<f64> = p.iter().zip(&q).map(|(a, b)| 0.5 * (a + b)).collect();
    let js = 0.5 * kl_raw(&p, &m) + 0.5 * kl_raw(&q, &m);
    Ok(js.clamp(0.0, 1.0).sqrt())
}

/// Concatenated per-sentiment aspect distributions, each weighted `1/S`.
pub fn profile_vector(profile: &AttributeProfile) -> Vec<f64> {
    let w = 1.0 / profile.sentiments.len() as f64;
    profile
        .sentiments
        .iter()
        .flat_map(|s| s.distribution.iter().map(move |p| p * w))
        .collect()
}

/// Labelled square matrix over attribute values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityMatrix {
    pub labels: Vec<String>,
    pub values: Vec<Vec<f64>>,
}

impl SimilarityMatrix {
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for l in &self.labels {
            out.push('\t');
            out.push_str(l);
        }
        out.push('\n');
        for (l, row) in self.labels.iter().zip(&self.values) {
            out.push_str(l);
            for x in row {
                let _ = write!(out, "\t{x}");
            }
            out.push('\n');
        }
        out
    }
}

/// Pairwise JS distances between profile vectors, divided by the largest
/// off-diagonal entry when that is positive.
pub fn profile_distance_matrix(profiles: &[AttributeProfile]) -> Result<SimilarityMatrix> {
    let vectors: Vec<Vec<f64>> = profiles.iter().map(profile_vector).collect();
    if let Some(first) = profiles.first() {
        let shape = (first.sentiments.len(), first.num_aspects());
        for p in profiles {
            if (p.sentiments.len(), p.num_aspects()) != shape || p.sentiments.iter().any(|s| s.distribution.len() != shape.1)
            {
                return Err(Error::Mismatch(format!("profile {:?} has a different shape", p.attribute)));
            }
        }
    }
    let n = profiles.len();
    let mut values = vec![vec![0.0; n]; n];
    let mut max = 0.0f64;
    for i in 0..n {
        for j in i + 1..n {
            let d = js_distance(&vectors[i], &vectors[j])?;
            values[i][j] = d;
            values[j][i] = d;
            max = max.max(d);
        }
    }
    if max > 0.0 {
        values.iter_mut().flatten().for_each(|x| *x /= max);
    }
    Ok(SimilarityMatrix {
        labels: profiles.iter().map(|p| p.attribute.clone()).collect(),
        values,
    })
}

/// Sum of all cross-set cosines divided by `m + n`.
pub fn baseline_similarity(d: &[Vec<f64>], r: &[Vec<f64>]) -> Result<f64> {
    if d.is_empty() || r.is_empty() {
        return Err(Error::InvalidParameter("baseline similarity needs two non-empty sets".into()));
    }
    let mut total = 0.0;
    for x in d {
        for y in r {
            total += cosine_similarity(x, y)?;
        }
    }
    Ok(total / (d.len() + r.len()) as f64)
}

/// Mean sentence embedding of every document.
pub fn review_embeddings(corpus: &Corpus, sentences: &EmbeddingTable) -> Result<Vec<Vec<f64>>> {
    let dim = sentences.dimension();
    let mut out = vec![vec![0.0; dim]; corpus.num_documents()];
    for global in 0..corpus.num_sentences() {
        let key = corpus.sentence_key(global);
        let v = sentences.get(&key).ok_or(Error::MissingEmbedding(key))?;
        let doc = &mut out[corpus.sentence(global).doc];
        for (acc, &x) in doc.iter_mut().zip(v) {
            *acc += x as f64;
        }
    }
    for (doc, acc) in corpus.documents().iter().zip(&mut out) {
        let m = doc.sentences.len() as f64;
        acc.iter_mut().for_each(|x| *x /= m);
    }
    Ok(out)
}

/// Baseline similarity between the review sets of every pair of attribute
/// values; the diagonal compares a set with itself.
pub fn baseline_matrix(corpus: &Corpus, sentences: &EmbeddingTable) -> Result<SimilarityMatrix> {
    let reviews = review_embeddings(corpus, sentences)?;
    let na = corpus.attributes().len();
    let mut groups: Vec<Vec<Vec<f64>>> = vec![Vec::new(); na];
    for (doc, v) in corpus.documents().iter().zip(reviews) {
        groups[doc.attribute].push(v);
    }
    let mut values = vec![vec![0.0; na]; na];
    for i in 0..na {
        for j in i..na {
            let s = baseline_similarity(&groups[i], &groups[j])?;
            values[i][j] = s;
            values[j][i] = s;
        }
    }
    Ok(SimilarityMatrix {
        labels: corpus.attributes().values().to_vec(),
        values,
    })
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;
    use crate::estimates::SentimentProfile;

    #[test]
    fn kl_examples() {
        assert!(kl_divergence(&[0.3, 0.7], &[0.3, 0.7]).unwrap().abs() < 1e-15);
        assert!((kl_divergence(&[1.0, 0.0], &[0.5, 0.5]).unwrap() - 1.0).abs() < 1e-9);
        let (p, q) = ([0.9, 0.1], [0.5, 0.5]);
        let pq = kl_divergence(&p, &q).unwrap();
        let qp = kl_divergence(&q, &p).unwrap();
        let want_pq = 0.9 * (0.9f64 / 0.5).log2() + 0.1 * (0.1f64 / 0.5).log2();
        let want_qp = 0.5 * (0.5f64 / 0.9).log2() + 0.5 * (0.5f64 / 0.1).log2();
        assert!((pq - want_pq).abs() < 1e-9 && (qp - want_qp).abs() < 1e-9);
        assert!((pq - qp).abs() > 0.1);
        assert!(kl_divergence(&[1.0], &[0.5, 0.5]).is_err());
        assert!(kl_divergence(&[-1.0, 2.0], &[0.5, 0.5]).is_err());
    }

    #[test]
    fn js_examples() {
        assert_eq!(js_distance(&[0.2, 0.8], &[0.2, 0.8]).unwrap(), 0.0);
        assert!((js_distance(&[1.0, 0.0], &[0.0, 1.0]).unwrap() - 1.0).abs() < 1e-9);
    }

    fn profile(name: &str, rows: &[&[f64]]) -> AttributeProfile {
        AttributeProfile {
            attribute: name.into(),
            sentiments: rows
                .iter()
                .map(|r| SentimentProfile {
                    distribution: r.to_vec(),
                    ranking: Vec::new(),
                })
                .collect(),
        }
    }

    #[test]
    fn profile_matrix_examples() {
        let same = [profile("a", &[&[0.5, 0.5], &[0.2, 0.8]]), profile("b", &[&[0.5, 0.5], &[0.2, 0.8]])];
        let m = profile_distance_matrix(&same).unwrap();
        assert_eq!(m.values, vec![vec![0.0, 0.0], vec![0.0, 0.0]]);

        let disjoint = [profile("a", &[&[1.0, 0.0], &[1.0, 0.0]]), profile("b", &[&[0.0, 1.0], &[0.0, 1.0]])];
        assert_eq!(profile_distance_matrix(&disjoint).unwrap().values[0][1], 1.0);

        let three = [
            profile("x", &[&[0.7, 0.2, 0.1], &[0.1, 0.1, 0.8]]),
            profile("y", &[&[0.3, 0.3, 0.4], &[0.2, 0.5, 0.3]]),
            profile("z", &[&[0.1, 0.6, 0.3], &[0.6, 0.2, 0.2]]),
        ];
        let m = profile_distance_matrix(&three).unwrap();
        let v: Vec<Vec<f64>> = three.iter().map(profile_vector).collect();
        let raw = |i: usize, j: usize| js_distance(&v[i], &v[j]).unwrap();
        let max = raw(0, 1).max(raw(0, 2)).max(raw(1, 2));
        for i in 0..3 {
            assert_eq!(m.values[i][i], 0.0);
            for j in 0..3 {
                if i != j {
                    assert_eq!(m.values[i][j], raw(i, j) / max);
                    assert_eq!(m.values[i][j], m.values[j][i]);
                }
            }
        }
        let tsv = m.to_tsv();
        assert!(tsv.starts_with("\tx\ty\tz\n"));
        assert_eq!(tsv.lines().count(), 4);

        let bad = [profile("a", &[&[0.5, 0.5]]), profile("b", &[&[0.2, 0.3, 0.5]])];
        assert!(profile_distance_matrix(&bad).is_err());
    }

    #[test]
    fn baseline_examples() {
        let s = baseline_similarity(&[vec![1.0, 2.0]], &[vec![1.0, 2.0]]).unwrap();
        assert!((s - 0.5).abs() < 1e-15);
        assert_eq!(baseline_similarity(&[vec![1.0, 0.0]], &[vec![0.0, 3.0]]).unwrap(), 0.0);
        assert!(baseline_similarity(&[], &[vec![1.0]]).is_err());
        // 2x2 fixture: cosines 1, 0, r, r with r = 1/sqrt 2, over m + n = 4.
        let d = [vec![1.0, 0.0], vec![1.0, 1.0]];
        let r = [vec![2.0, 0.0], vec![0.0, 1.0]];
        let want = (1.0 + 0.0 + 2.0 * std::f64::consts::FRAC_1_SQRT_2) / 4.0;
        assert!((baseline_similarity(&d, &r).unwrap() - want).abs() < 1e-15);
    }

    #[test]
    fn review_embeddings_average_sentences() {
        use crate::corpus::{CorpusBuilder, RawDocument};
        let mut b = CorpusBuilder::new();
        for (id, attr) in [("r0", "x"), ("r1", "y")] {
            b.push(RawDocument {
                id: id.into(),
                attribute: attr.into(),
                rating: None,
                sentences: vec![vec!["a".into()], vec!["b".into()]],
            });
        }
        let corpus = b.build().unwrap();
        let mut e = EmbeddingTable::new(2);
        e.insert("r0#0", &[1.0, 0.0]).unwrap();
        e.insert("r0#1", &[0.0, 1.0]).unwrap();
        e.insert("r1#0", &[2.0, 2.0]).unwrap();
        assert!(matches!(review_embeddings(&corpus, &e), Err(Error::MissingEmbedding(k)) if k == "r1#1"));
        e.insert("r1#1", &[4.0, 0.0]).unwrap();
        let r = review_embeddings(&corpus, &e).unwrap();
        assert_eq!(r, vec![vec![0.5, 0.5], vec![3.0, 1.0]]);
        let m = baseline_matrix(&corpus, &e).unwrap();
        assert_eq!(m.labels, vec!["x", "y"]);
        assert!((m.values[0][0] - 0.5).abs() < 1e-15);
        assert_eq!(m.values[0][1], m.values[1][0]);
    }

    fn distribution(n: usize) -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(0.0f64..1.0, n).prop_map(|v| {
            let t: f64 = v.iter().sum::<f64>() + 1e-9;
            v.into_iter().map(|x| x / t).collect()
        })
    }

    proptest! {
        #[test]
        fn js_is_a_bounded_symmetric_metric((p, q, r) in (2usize..8).prop_flat_map(|n| (distribution(n), distribution(n), distribution(n)))) {
            let pq = js_distance(&p, &q).unwrap();
            prop_assert!((0.0..=1.0).contains(&pq));
            prop_assert!((pq - js_distance(&q, &p).unwrap()).abs() < 1e-12);
            prop_assert!(js_distance(&p, &p).unwrap() < 1e-9);
            prop_assert!(pq <= js_distance(&p, &r).unwrap() + js_distance(&r, &q).unwrap() + 1e-9);
            prop_assert!(kl_divergence(&p, &q).unwrap() >= 0.0);
        }
    }
}
