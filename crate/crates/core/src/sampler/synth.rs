use rand::Rng;
use rand_distr::{Distribution, Gamma};

use super::sample_assignment;
use crate::corpus::{Corpus, CorpusBuilder, RawDocument, Vocabulary};
use crate::error::{Error, Result};

/// Parameters of a synthetic corpus drawn from the model's generative process.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub num_documents: usize,
    pub num_attributes: usize,
    /// Inclusive bounds.
    pub sentences_per_document: (usize, usize),
    /// Inclusive bounds.
    pub words_per_sentence: (usize, usize),
    pub vocab_size: usize,
    pub num_sentiments: usize,
    pub num_aspects: usize,
    /// Dirichlet parameters of each word distribution, indexed `s * T + t`.
    /// Zero entries are allowed.
    pub phi_prior: Vec<Vec<f64>>,
    /// Dirichlet parameters of each aspect distribution.
    pub psi_prior: Vec<f64>,
    /// Dirichlet parameters of each document's sentiment distribution.
    pub theta_prior: Vec<f64>,
}

impl SyntheticSpec {
    /// Symmetric priors throughout.
    #[allow(clippy::too_many_arguments)]
    pub fn symmetric(
        num_documents: usize,
        num_attributes: usize,
        num_sentiments: usize,
        num_aspects: usize,
        vocab_size: usize,
        alpha: f64,
        gamma: f64,
        beta: f64,
    ) -> Self {
        SyntheticSpec {
            num_documents,
            num_attributes,
            sentences_per_document: (4, 8),
            words_per_sentence: (4, 8),
            vocab_size,
            num_sentiments,
            num_aspects,
            phi_prior: vec![vec![alpha; vocab_size]; num_sentiments * num_aspects],
            psi_prior: vec![gamma; num_aspects],
            theta_prior: vec![beta; num_sentiments],
        }
    }

    /// Vocabulary terms `w0000, w0001, ...`; ids equal the planted indices.
    pub fn vocabulary(&self) -> Vocabulary {
        Vocabulary::from_terms((0..self.vocab_size).map(|v| format!("w{v:04}")))
            .expect("generated terms are distinct")
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(format!("synthetic spec: {m}")));
        let (s, t, w) = (self.num_sentiments, self.num_aspects, self.vocab_size);
        if self.num_documents == 0 || self.num_attributes == 0 || s == 0 || t == 0 || w == 0 {
            return bad("all sizes must be positive");
        }
        let (lo, hi) = self.sentences_per_document;
        let (wlo, whi) = self.words_per_sentence;
        if lo == 0 || lo > hi || wlo == 0 || wlo > whi {
            return bad("length ranges must be non-empty and start at 1 or more");
        }
        if self.phi_prior.len() != s * t || self.phi_prior.iter().any(|r| r.len() != w) {
            return bad("phi_prior must have S*T rows of length W");
        }
        if self.psi_prior.len() != t || self.theta_prior.len() != s {
            return bad("psi_prior needs T entries and theta_prior S entries");
        }
        let rows = self.phi_prior.iter().chain([&self.psi_prior, &self.theta_prior]);
        for row in rows {
            if row.iter().any(|&a| !(a >= 0.0 && a.is_finite())) || row.iter().all(|&a| a == 0.0) {
                return bad("Dirichlet parameters must be finite, >= 0 and not all zero");
            }
        }
        Ok(())
    }
}

/// A generated corpus with its planted parameters and labels.
#[derive(Debug, Clone)]
pub struct SyntheticCorpus {
    pub corpus: Corpus,
    /// Word distributions indexed `s * T + t`.
    pub phi: Vec<Vec<f64>>,
    /// Aspect distributions indexed `s * A + a`.
    pub psi: Vec<Vec<f64>>,
    /// Per document.
    pub theta: Vec<Vec<f64>>,
    /// Planted labels per global sentence.
    pub sentiments: Vec<usize>,
    pub aspects: Vec<usize>,
}

/// Dirichlet draw via normalized Gamma variates; zero parameters yield zero
/// components.
pub fn sample_dirichlet<R: Rng + ?Sized>(params: &[f64], rng: &mut R) -> Vec<f64> {
    let mut draw: Vec<f64> = params
        .iter()
        .map(|&a| {
            if a > 0.0 {
                Gamma::new(a, 1.0).expect("shape is positive").sample(rng)
            } else {
                0.0
            }
        })
        .collect();
    let total: f64 = draw.iter().sum();
    if total > 0.0 {
        draw.iter_mut().for_each(|x| *x /= total);
    } else {
        // Every variate underflowed; fall back to the largest parameter.
        let k = (0..params.len())
            .max_by(|&i, &j| params[i].total_cmp(&params[j]).then(j.cmp(&i)))
            .unwrap_or(0);
        draw.iter_mut().for_each(|x| *x = 0.0);
        draw[k] = 1.0;
    }
    draw
}

/// Draws word, aspect and sentiment distributions, then documents: each gets
/// attribute `d mod A` and a rating of `1 + round(4 * theta_d[0])`; each
/// sentence draws a sentiment from the document, an aspect given sentiment
/// and attribute, and its words given both.
pub fn generate_synthetic<R: Rng + ?Sized>(spec: &SyntheticSpec, rng: &mut R) -> Result<SyntheticCorpus> {
    spec.validate()?;
    let (ns, nt, na) = (spec.num_sentiments, spec.num_aspects, spec.num_attributes);
    let phi: Vec<Vec<f64>> = spec.phi_prior.iter().map(|p| sample_dirichlet(p, rng)).collect();
    let psi: Vec<Vec<f64>> = (0..ns * na).map(|_| sample_dirichlet(&spec.psi_prior, rng)).collect();

    let vocabulary = spec.vocabulary();
    let mut builder = CorpusBuilder::new().with_vocabulary(vocabulary.clone());
    let mut theta = Vec::with_capacity(spec.num_documents);
    let mut sentiments = Vec::new();
    let mut aspects = Vec::new();
    for d in 0..spec.num_documents {
        let a = d % na;
        let theta_d = sample_dirichlet(&spec.theta_prior, rng);
        let m = rng.random_range(spec.sentences_per_document.0..=spec.sentences_per_document.1);
        let mut sentences = Vec::with_capacity(m);
        for _ in 0..m {
            let s = sample_assignment(&theta_d, rng)?;
            let t = sample_assignment(&psi[s * na + a], rng)?;
            let len = rng.random_range(spec.words_per_sentence.0..=spec.words_per_sentence.1);
            let words = (0..len)
                .map(|_| sample_assignment(&phi[s * nt + t], rng).map(|v| vocabulary.terms()[v].clone()))
                .collect::<Result<Vec<_>>>()?;
            sentences.push(words);
            sentiments.push(s);
            aspects.push(t);
        }
        let rating = (1.0 + (4.0 * theta_d[0]).round()) as u8;
        builder.push(RawDocument {
            id: format!("doc{d}"),
            attribute: format!("a{a}"),
            rating: Some(rating),
            sentences,
        });
        theta.push(theta_d);
    }
    Ok(SyntheticCorpus {
        corpus: builder.build()?,
        phi,
        psi,
        theta,
        sentiments,
        aspects,
    })
}
