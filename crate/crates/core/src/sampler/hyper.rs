use std::collections::BTreeSet;

use crate::corpus::{Normalizer, Vocabulary};
use crate::error::{Error, Result};
use crate::WordId;

/// Sentiment index of the positive class.
pub const POSITIVE: usize = 0;
/// Sentiment index of the negative class.
pub const NEGATIVE: usize = 1;

pub const DEFAULT_BETA: f64 = 5.0;
pub const DEFAULT_LAMBDA: f64 = 1.0;
pub const DEFAULT_ITERATIONS: usize = 1000;
pub const DEFAULT_BURN_IN: usize = 500;

/// Symmetric aspect prior `50 / T`.
pub fn default_gamma(num_aspects: usize) -> f64 {
    50.0 / num_aspects as f64
}

/// Dense word prior `alpha(s, v)` with cached per-sentiment sums.
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaPrior {
    num_sentiments: usize,
    vocab_size: usize,
    values: Vec<f64>,
    sums: Vec<f64>,
}

impl AlphaPrior {
    pub fn uniform(num_sentiments: usize, vocab_size: usize, value: f64) -> Self {
        Self::from_values(num_sentiments, vocab_size, vec![value; num_sentiments * vocab_size])
            .expect("shape is consistent by construction")
    }

    /// `values` is row-major `[s][v]`.
    pub fn from_values(num_sentiments: usize, vocab_size: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != num_sentiments * vocab_size {
            return Err(Error::DimensionMismatch {
                expected: num_sentiments * vocab_size,
                actual: values.len(),
            });
        }
        let sums = values.chunks(vocab_size.max(1)).map(|row| row.iter().sum()).collect();
        Ok(AlphaPrior {
            num_sentiments,
            vocab_size,
            values,
            sums,
        })
    }

    pub fn num_sentiments(&self) -> usize {
        self.num_sentiments
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    #[inline]
    pub fn get(&self, s: usize, v: WordId) -> f64 {
        self.values[s * self.vocab_size + v as usize]
    }

    pub fn row(&self, s: usize) -> &[f64] {
        &self.values[s * self.vocab_size..(s + 1) * self.vocab_size]
    }

    #[inline]
    pub fn sum(&self, s: usize) -> f64 {
        self.sums[s]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Values of the lexicon-driven word prior.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaScheme {
    /// Lexicon word under its own sentiment.
    pub high: f64,
    /// Lexicon word under a different sentiment.
    pub zero: f64,
    /// Every other word.
    pub base: f64,
}

impl Default for AlphaScheme {
    fn default() -> Self {
        AlphaScheme {
            high: 5.0,
            zero: 0.0,
            base: 0.05,
        }
    }
}

/// Seed words per polarity, in the same normalized form as corpus tokens.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SentimentLexicon {
    positive: BTreeSet<String>,
    negative: BTreeSet<String>,
}

const POSITIVE_SEEDS: &[&str] = &[
    "amazing", "attractive", "awesome", "best", "comfortable", "correct", "enjoy", "excellent",
    "fantastic", "favorite", "fortunate", "free", "fun", "glad", "good", "great", "happy",
    "impressive", "love", "nice", "not_bad", "perfect", "positive", "recommend", "satisfied",
    "superior", "thank", "worth",
];

const NEGATIVE_SEEDS: &[&str] = &[
    "annoying", "bad", "complain", "disappointed", "hate", "inferior", "junk", "mess", "nasty",
    "negative", "not_good", "not_like", "not_recommend", "not_worth", "poor", "problem",
    "regret", "slow", "small", "sorry", "terrible", "trouble", "unacceptable", "unfortunate",
    "upset", "waste", "worst", "worthless", "wrong",
];

impl SentimentLexicon {
    pub fn new<I, J, S, T>(positive: I, negative: J) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        J: IntoIterator<Item = T>,
        S: Into<String>,
        T: Into<String>,
    {
        let positive: BTreeSet<String> = positive.into_iter().map(Into::into).collect();
        let negative: BTreeSet<String> = negative.into_iter().map(Into::into).collect();
        if let Some(both) = positive.intersection(&negative).next() {
            return Err(Error::InvalidParameter(format!(
                "lexicon term {both:?} is listed as both positive and negative"
            )));
        }
        Ok(SentimentLexicon { positive, negative })
    }

    /// The built-in general-purpose seed lists, unstemmed.
    pub fn seed_words() -> Self {
        Self::new(POSITIVE_SEEDS.iter().copied(), NEGATIVE_SEEDS.iter().copied())
            .expect("seed lists are disjoint")
    }

    /// The built-in seed lists passed through the corpus normalizer's stemmer.
    pub fn default_stemmed(normalizer: &Normalizer) -> Result<Self> {
        Self::seed_words().normalized(normalizer)
    }

    /// Maps every term to its normalized surface form.
    pub fn normalized(&self, normalizer: &Normalizer) -> Result<Self> {
        Self::new(
            self.positive.iter().map(|t| normalizer.stem_term(t)),
            self.negative.iter().map(|t| normalizer.stem_term(t)),
        )
    }

    pub fn positive(&self) -> &BTreeSet<String> {
        &self.positive
    }

    pub fn negative(&self) -> &BTreeSet<String> {
        &self.negative
    }

    /// Seed polarity of a term, if any.
    pub fn polarity(&self, term: &str) -> Option<usize> {
        if self.positive.contains(term) {
            Some(POSITIVE)
        } else if self.negative.contains(term) {
            Some(NEGATIVE)
        } else {
            None
        }
    }
}

/// Builds the asymmetric word prior from a lexicon. Sentiment 0 is positive
/// and 1 negative; any further sentiments treat lexicon words as `zero`.
pub fn build_alpha(
    lexicon: &SentimentLexicon,
    vocabulary: &Vocabulary,
    num_sentiments: usize,
    scheme: AlphaScheme,
) -> Result<AlphaPrior> {
    let AlphaScheme { high, zero, base } = scheme;
    if !(high > base && base > zero && zero >= 0.0) || !high.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "alpha scheme needs high > base > zero >= 0, got {high}, {base}, {zero}"
        )));
    }
    if num_sentiments < 2 {
        return Err(Error::InvalidParameter(
            "a lexicon prior needs at least two sentiments".into(),
        ));
    }
    let w = vocabulary.len();
    let mut values = vec![base; num_sentiments * w];
    for (v, term) in vocabulary.terms().iter().enumerate() {
        if let Some(polarity) = lexicon.polarity(term) {
            for s in 0..num_sentiments {
                values[s * w + v] = if s == polarity { high } else { zero };
            }
        }
    }
    AlphaPrior::from_values(num_sentiments, w, values)
}

/// Model hyperparameters and run length.
#[derive(Debug, Clone, PartialEq)]
pub struct Hyperparams {
    pub num_sentiments: usize,
    pub num_aspects: usize,
    pub alpha: AlphaPrior,
    pub beta: Vec<f64>,
    pub gamma: Vec<f64>,
    pub lambda: f64,
    pub epsilon: f64,
    pub iterations: usize,
    pub burn_in: usize,
    pub seed: u64,
}

impl Hyperparams {
    /// Defaults: `beta = 5`, `gamma = 50 / T`, `lambda = 1`, no urn promotion.
    pub fn new(num_sentiments: usize, num_aspects: usize, alpha: AlphaPrior) -> Self {
        Hyperparams {
            num_sentiments,
            num_aspects,
            alpha,
            beta: vec![DEFAULT_BETA; num_sentiments],
            gamma: vec![default_gamma(num_aspects.max(1)); num_aspects],
            lambda: DEFAULT_LAMBDA,
            epsilon: 0.0,
            iterations: DEFAULT_ITERATIONS,
            burn_in: DEFAULT_BURN_IN,
            seed: 0,
        }
    }

    pub fn total_sweeps(&self) -> usize {
        self.burn_in + self.iterations
    }

    pub fn validate(&self, vocab_size: usize) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        let (s, t) = (self.num_sentiments, self.num_aspects);
        if s == 0 || t == 0 {
            return bad(format!("need at least one sentiment and one aspect, got S={s}, T={t}"));
        }
        if s > u16::MAX as usize || t > u16::MAX as usize {
            return bad("S and T must fit in 16 bits".into());
        }
        if self.alpha.num_sentiments() != s || self.alpha.vocab_size() != vocab_size {
            return bad(format!(
                "alpha has shape {}x{}, expected {s}x{vocab_size}",
                self.alpha.num_sentiments(),
                self.alpha.vocab_size()
            ));
        }
        if self.alpha.values().iter().any(|&a| !(a >= 0.0 && a.is_finite())) {
            return bad("alpha entries must be finite and >= 0".into());
        }
        if let Some(k) = (0..s).find(|&k| self.alpha.sum(k) <= 0.0) {
            return bad(format!("alpha row for sentiment {k} sums to zero"));
        }
        if self.beta.len() != s || self.beta.iter().any(|&b| !(b > 0.0 && b.is_finite())) {
            return bad(format!("beta needs {s} finite entries > 0"));
        }
        if self.gamma.len() != t || self.gamma.iter().any(|&g| !(g > 0.0 && g.is_finite())) {
            return bad(format!("gamma needs {t} finite entries > 0"));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return bad(format!("lambda must be finite and >= 0, got {}", self.lambda));
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return bad(format!("epsilon must lie in [0, 1], got {}", self.epsilon));
        }
        Ok(())
    }
}
