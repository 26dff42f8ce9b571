//! Run configuration, read from TOML. Relative paths resolve against the
//! directory of the configuration file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use trait_core::graph::{DEFAULT_PROMOTION_THRESHOLD, DEFAULT_PROMOTION_TOP_K, DEFAULT_RHO};
use trait_core::sampler::{AlphaScheme, DEFAULT_BETA, DEFAULT_BURN_IN, DEFAULT_ITERATIONS, DEFAULT_LAMBDA};
use trait_core::NormalizationConfig;

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub paths: PathsConfig,
    pub normalization: NormalizationConfig,
    pub model: ModelConfig,
    pub evaluation: EvaluationConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 42,
            paths: PathsConfig::default(),
            normalization: NormalizationConfig::default(),
            model: ModelConfig::default(),
            evaluation: EvaluationConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsConfig {
    /// Review corpus in raw or pre-tokenized JSONL.
    pub corpus: PathBuf,
    /// Sentence embeddings keyed `<doc_id>#<sentence_index>`.
    pub sentence_embeddings: Option<PathBuf>,
    /// Word embeddings keyed by normalized vocabulary term.
    pub word_embeddings: Option<PathBuf>,
    pub output_dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub sentiments: usize,
    pub aspects: usize,
    pub alpha_high: f64,
    pub alpha_zero: f64,
    pub alpha_base: f64,
    pub beta: f64,
    /// Defaults to `50 / aspects`.
    pub gamma: Option<f64>,
    pub lambda: f64,
    /// Urn promotion weight; 0.3 suits hotel reviews and 0.1 restaurants.
    pub epsilon: f64,
    pub rho: f64,
    pub promotion_threshold: f64,
    pub promotion_top_k: usize,
    pub iterations: usize,
    pub burn_in: usize,
    pub chains: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        let alpha = AlphaScheme::default();
        ModelConfig {
            sentiments: 2,
            aspects: 20,
            alpha_high: alpha.high,
            alpha_zero: alpha.zero,
            alpha_base: alpha.base,
            beta: DEFAULT_BETA,
            gamma: None,
            lambda: DEFAULT_LAMBDA,
            epsilon: 0.0,
            rho: DEFAULT_RHO,
            promotion_threshold: DEFAULT_PROMOTION_THRESHOLD,
            promotion_top_k: DEFAULT_PROMOTION_TOP_K,
            iterations: DEFAULT_ITERATIONS,
            burn_in: DEFAULT_BURN_IN,
            chains: 1,
        }
    }
}

impl ModelConfig {
    pub fn alpha_scheme(&self) -> AlphaScheme {
        AlphaScheme {
            high: self.alpha_high,
            zero: self.alpha_zero,
            base: self.alpha_base,
        }
    }

    pub fn gamma(&self) -> f64 {
        self.gamma.unwrap_or(50.0 / self.aspects.max(1) as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluationConfig {
    pub top_words: usize,
    pub top_aspects: usize,
    /// Sweeps between log lines during training; 0 disables them.
    pub log_interval: usize,
}

impl Default for EvaluationConfig {
    fn default() -> Self {
        EvaluationConfig {
            top_words: 20,
            top_aspects: 30,
            log_interval: 50,
        }
    }
}

impl RunConfig {
    /// Parses a configuration file and resolves its relative paths.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Validation(vec![format!("{}: {e}", path.display())]))?;
        let mut config: RunConfig =
            toml::from_str(&text).map_err(|e| CliError::Validation(vec![format!("{}: {e}", path.display())]))?;
        config.resolve(path.parent().unwrap_or(Path::new(".")));
        Ok(config)
    }

    pub fn resolve(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() && !p.as_os_str().is_empty() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.paths.corpus);
        fix(&mut self.paths.output_dir);
        self.paths.sentence_embeddings.as_mut().map(fix);
        self.paths.word_embeddings.as_mut().map(fix);
    }
}

fn finite(x: f64) -> bool {
    x.is_finite()
}

/// Every violated constraint, naming the field and the rule. Empty when the
/// configuration is usable.
pub fn validate_config(config: &RunConfig) -> Vec<String> {
    let mut out = Vec::new();
    let mut check = |ok: bool, msg: String| {
        if !ok {
            out.push(msg);
        }
    };
    let m = &config.model;
    let p = &config.paths;

    check(!p.corpus.as_os_str().is_empty(), "paths.corpus: required".into());
    if !p.corpus.as_os_str().is_empty() {
        check(p.corpus.is_file(), format!("paths.corpus: {} does not exist", p.corpus.display()));
    }
    check(!p.output_dir.as_os_str().is_empty(), "paths.output_dir: required".into());
    for (field, path) in [
        ("paths.sentence_embeddings", &p.sentence_embeddings),
        ("paths.word_embeddings", &p.word_embeddings),
    ] {
        if let Some(path) = path {
            check(path.is_file(), format!("{field}: {} does not exist", path.display()));
        }
    }

    check(m.sentiments >= 2, format!("model.sentiments: must be sentiments ≥ 2 (got {})", m.sentiments));
    check(
        m.sentiments <= u16::MAX as usize,
        format!("model.sentiments: must fit in 16 bits (got {})", m.sentiments),
    );
    check(m.aspects >= 1, format!("model.aspects: must be aspects ≥ 1 (got {})", m.aspects));
    check(
        m.aspects <= u16::MAX as usize,
        format!("model.aspects: must fit in 16 bits (got {})", m.aspects),
    );
    let a = m.alpha_scheme();
    check(
        finite(a.high) && a.high > a.base && a.base > a.zero && a.zero >= 0.0,
        format!(
            "model.alpha_*: must satisfy alpha_high > alpha_base > alpha_zero ≥ 0 (got {}, {}, {})",
            a.high, a.base, a.zero
        ),
    );
    check(finite(m.beta) && m.beta > 0.0, format!("model.beta: must be beta > 0 (got {})", m.beta));
    check(
        finite(m.gamma()) && m.gamma() > 0.0,
        format!("model.gamma: must be gamma > 0 (got {})", m.gamma()),
    );
    check(finite(m.lambda) && m.lambda >= 0.0, format!("model.lambda: must be lambda ≥ 0 (got {})", m.lambda));
    check(
        finite(m.epsilon) && (0.0..=1.0).contains(&m.epsilon),
        format!("model.epsilon: must be 0 ≤ epsilon ≤ 1 (got {})", m.epsilon),
    );
    check(
        finite(m.rho) && (-1.0..=1.0).contains(&m.rho),
        format!("model.rho: must be -1 ≤ rho ≤ 1 (got {})", m.rho),
    );
    check(
        finite(m.promotion_threshold) && (-1.0..=1.0).contains(&m.promotion_threshold),
        format!("model.promotion_threshold: must lie in [-1, 1] (got {})", m.promotion_threshold),
    );
    check(m.promotion_top_k >= 1, "model.promotion_top_k: must be ≥ 1".into());
    check(m.chains >= 1, "model.chains: must be ≥ 1".into());
    check(
        config.evaluation.top_words >= 1 && config.evaluation.top_aspects >= 1,
        "evaluation.top_words, evaluation.top_aspects: must be ≥ 1".into(),
    );
    check(
        !(m.epsilon > 0.0 && p.word_embeddings.is_none()),
        "paths.word_embeddings: required when epsilon > 0".into(),
    );
    check(
        !(m.lambda > 0.0 && p.sentence_embeddings.is_none()),
        "paths.sentence_embeddings: required when lambda > 0".into(),
    );
    out
}
