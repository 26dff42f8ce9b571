use std::collections::{BTreeMap, HashSet};

use regex::{Captures, Regex};
use serde::{Deserialize, Serialize};

use super::porter;
use crate::error::{Error, Result};

/// Prefix joining a negator to the word it modifies.
pub const NEGATION_PREFIX: &str = "not_";

/// A regex rewrite that replaces matches with a placeholder token such as `#LINK#`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlaceholderRule {
    pub pattern: String,
    pub placeholder: String,
}

/// Text normalization rules. Every field has a default, so an empty TOML
/// table is a valid configuration.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NormalizationConfig {
    pub stop_words: Vec<String>,
    /// Lowercase abbreviation → expansion, applied before sentence splitting.
    pub abbreviations: BTreeMap<String, String>,
    pub negators: Vec<String>,
    /// Applied in order, before tokenization.
    pub placeholders: Vec<PlaceholderRule>,
    pub stemming: bool,
    /// Minimum corpus frequency for a term to enter the vocabulary.
    pub min_count: usize,
}

impl Default for NormalizationConfig {
    fn default() -> Self {
        NormalizationConfig {
            stop_words: DEFAULT_STOP_WORDS.iter().map(|s| s.to_string()).collect(),
            abbreviations: DEFAULT_ABBREVIATIONS
                .iter()
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .collect(),
            negators: ["no", "not", "nothing"].iter().map(|s| s.to_string()).collect(),
            placeholders: default_placeholders(),
            stemming: true,
            min_count: 1,
        }
    }
}

fn default_placeholders() -> Vec<PlaceholderRule> {
    let rule = |pattern: &str, placeholder: &str| PlaceholderRule {
        pattern: pattern.to_string(),
        placeholder: placeholder.to_string(),
    };
    vec![
        rule(
            r#"(?i)\b(?:https?://|www\.)[^\s<>"]*[^\s<>".,;:!?)\]']"#,
            "#LINK#",
        ),
        rule(
            r"(?i)(?:[$€£]\s?\d[\d,]*(?:\.\d+)?(?:\s?(?:k|million|billion)\b)?|\b\d[\d,]*(?:\.\d+)?\s?(?:dollars?|usd|bucks|euros?|eur|pounds?|gbp)\b)",
            "#MONEY#",
        ),
        rule(r"(?i)\b\d+(?:[.,:]\d+)*(?:st|nd|rd|th|am|pm|s)?\b", "#NUMBER#"),
    ]
}

const DEFAULT_ABBREVIATIONS: &[(&str, &str)] = &[
    ("a.m.", "am"),
    ("p.m.", "pm"),
    ("approx.", "approximately"),
    ("ave.", "avenue"),
    ("blvd.", "boulevard"),
    ("can't", "can not"),
    ("dr.", "doctor"),
    ("e.g.", "for example"),
    ("etc.", "etc"),
    ("hrs.", "hours"),
    ("i.e.", "that is"),
    ("min.", "minutes"),
    ("mr.", "mister"),
    ("mrs.", "missus"),
    ("ms.", "miss"),
    ("shan't", "shall not"),
    ("st.", "street"),
    ("u.s.", "usa"),
    ("vs.", "versus"),
    ("w/", "with"),
    ("w/o", "without"),
    ("won't", "will not"),
];

const DEFAULT_STOP_WORDS: &[&str] = &[
    "a", "about", "above", "after", "again", "against", "all", "also", "am", "an", "and", "any",
    "are", "as", "at", "be", "because", "been", "before", "being", "below", "between", "both",
    "but", "by", "can", "could", "did", "do", "does", "doing", "down", "during", "each", "few",
    "for", "from", "further", "had", "has", "have", "having", "he", "her", "here", "hers",
    "herself", "him", "himself", "his", "how", "i", "if", "in", "into", "is", "it", "its",
    "itself", "just", "me", "more", "most", "my", "myself", "nor", "now", "of", "off", "on",
    "once", "only", "or", "other", "our", "ours", "ourselves", "out", "over", "own", "same",
    "she", "should", "so", "some", "such", "than", "that", "the", "their", "theirs", "them",
    "themselves", "then", "there", "these", "they", "this", "those", "through", "to", "too",
    "under", "until", "up", "us", "very", "was", "we", "were", "what", "when", "where", "which",
    "while", "who", "whom", "why", "will", "with", "would", "you", "your", "yours", "yourself",
    "yourselves",
];

/// Compiled normalization pipeline.
///
/// Order of operations: strip HTML, substitute placeholders, expand
/// abbreviations and `n't` contractions, split sentences on `.`, `!`, `?`,
/// tokenize and lowercase, merge `(negator, word)` pairs into `not_<stem>`,
/// drop stop words and stray negators, stem, drop empty sentences.
#[derive(Debug, Clone)]
pub struct Normalizer {
    config: NormalizationConfig,
    html: Regex,
    placeholders: Vec<(Regex, String)>,
    abbreviations: Option<Regex>,
    contraction: Regex,
    boundary: Regex,
    token: Regex,
    stop_words: HashSet<String>,
    negators: HashSet<String>,
}

impl Normalizer {
    pub fn new(config: NormalizationConfig) -> Result<Self> {
        let compile = |pattern: &str| {
            Regex::new(pattern)
                .map_err(|e| Error::InvalidParameter(format!("bad pattern {pattern:?}: {e}")))
        };
        let placeholders = config
            .placeholders
            .iter()
            .map(|rule| Ok((compile(&rule.pattern)?, rule.placeholder.clone())))
            .collect::<Result<Vec<_>>>()?;

        let mut keys: Vec<&String> = config.abbreviations.keys().collect();
        keys.sort_by(|a, b| b.len().cmp(&a.len()).then(a.cmp(b)));
        let abbreviations = if keys.is_empty() {
            None
        } else {
            let alternatives: Vec<String> = keys
                .iter()
                .map(|k| {
                    let escaped = regex::escape(k);
                    let starts_word = k.chars().next().is_some_and(|c| c.is_alphanumeric());
                    let ends_word = k.chars().last().is_some_and(|c| c.is_alphanumeric());
                    format!(
                        "{}{}{}",
                        if starts_word { r"\b" } else { "" },
                        escaped,
                        if ends_word { r"\b" } else { "" }
                    )
                })
                .collect();
            Some(compile(&format!("(?i)(?:{})", alternatives.join("|")))?)
        };

        Ok(Normalizer {
            html: compile(r"(?s)<[^>]*>")?,
            placeholders,
            abbreviations,
            contraction: compile(r"(?i)\b([a-z]+)n['’]t\b")?,
            boundary: compile(r"[.!?]+")?,
            token: compile(r"#[A-Za-z]+#|[\p{L}\p{N}]+(?:[_'’][\p{L}\p{N}]+)*")?,
            stop_words: config.stop_words.iter().map(|w| w.to_lowercase()).collect(),
            negators: config.negators.iter().map(|w| w.to_lowercase()).collect(),
            config,
        })
    }

    pub fn config(&self) -> &NormalizationConfig {
        &self.config
    }

    /// Stems a single lowercase word if stemming is enabled. Negated terms
    /// keep their prefix and only the head word is stemmed.
    pub fn stem_term(&self, term: &str) -> String {
        if let Some(head) = term.strip_prefix(NEGATION_PREFIX) {
            return format!("{NEGATION_PREFIX}{}", self.stem_word(head));
        }
        self.stem_word(term)
    }

    fn stem_word(&self, word: &str) -> String {
        if self.config.stemming {
            porter::stem(word)
        } else {
            word.to_string()
        }
    }

    /// Splits raw text into normalized, unindexed sentences.
    pub fn normalize(&self, raw: &str) -> Vec<Vec<String>> {
        let mut text = self.html.replace_all(raw, " ").into_owned();
        for (from, to) in [
            ("&amp;", "&"),
            ("&quot;", "\""),
            ("&#39;", "'"),
            ("&lt;", " "),
            ("&gt;", " "),
            ("&nbsp;", " "),
        ] {
            text = text.replace(from, to);
        }
        for (re, placeholder) in &self.placeholders {
            let padded = format!(" {placeholder} ");
            text = re.replace_all(&text, padded.as_str()).into_owned();
        }
        if let Some(re) = &self.abbreviations {
            text = re
                .replace_all(&text, |caps: &Captures| {
                    let key = caps[0].to_lowercase();
                    self.config.abbreviations.get(&key).cloned().unwrap_or(key)
                })
                .into_owned();
        }
        text = self.contraction.replace_all(&text, "$1 not").into_owned();

        self.boundary
            .split(&text)
            .map(|chunk| self.normalize_sentence(chunk))
            .filter(|s| !s.is_empty())
            .collect()
    }

    fn normalize_sentence(&self, chunk: &str) -> Vec<String> {
        let raw: Vec<String> = self
            .token
            .find_iter(chunk)
            .filter_map(|m| clean_token(m.as_str()))
            .collect();

        let mut out = Vec::with_capacity(raw.len());
        let mut i = 0;
        while i < raw.len() {
            let tok = &raw[i];
            if self.negators.contains(tok) {
                match raw.get(i + 1) {
                    Some(next) if self.can_negate(next) => {
                        out.push(format!("{NEGATION_PREFIX}{}", self.stem_word(next)));
                        i += 2;
                    }
                    _ => i += 1,
                }
                continue;
            }
            i += 1;
            if is_placeholder(tok) || tok.contains('_') {
                out.push(tok.clone());
            } else if !self.stop_words.contains(tok) {
                out.push(self.stem_word(tok));
            }
        }
        out
    }

    fn can_negate(&self, word: &str) -> bool {
        !self.negators.contains(word) && !is_placeholder(word) && !word.contains('_')
    }
}

/// Normalizes raw text with the given rules. Compiles the rules on each
/// call; use [`Normalizer`] directly when processing many documents.
pub fn normalize_text(raw: &str, rules: &NormalizationConfig) -> Result<Vec<Vec<String>>> {
    Ok(Normalizer::new(rules.clone())?.normalize(raw))
}

pub(crate) fn is_placeholder(tok: &str) -> bool {
    tok.len() > 2 && tok.starts_with('#') && tok.ends_with('#')
}

fn clean_token(tok: &str) -> Option<String> {
    if is_placeholder(tok) {
        return Some(tok.to_uppercase());
    }
    let lower = tok.to_lowercase().replace('’', "'");
    let lower = lower.strip_suffix("'s").unwrap_or(&lower);
    let cleaned: String = lower.chars().filter(|&c| c != '\'').collect();
    (!cleaned.is_empty()).then_some(cleaned)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn normalizer() -> Normalizer {
        Normalizer::new(NormalizationConfig::default()).unwrap()
    }

    #[test]
    fn negation_is_merged() {
        let out = normalizer().normalize("I would not recommend it.");
        assert_eq!(out.len(), 1);
        assert!(out[0].contains(&"not_recommend".to_string()), "{out:?}");
        assert!(!out[0].iter().any(|t| t == "not" || t == "i" || t == "it"));
    }

    #[test]
    fn other_negators_produce_not_prefix() {
        let out = normalizer().normalize("Nothing worked. No towels!");
        assert_eq!(out, vec![vec!["not_work"], vec!["not_towel"]]);
    }

    #[test]
    fn contractions_expand_into_negations() {
        let out = normalizer().normalize("We didn't like the room and it won't matter");
        assert!(out[0].contains(&"not_like".to_string()), "{out:?}");
        assert!(out[0].contains(&"not_matter".to_string()), "{out:?}");
    }

    #[test]
    fn empty_input_yields_nothing() {
        assert!(normalizer().normalize("").is_empty());
        assert!(normalizer().normalize("  ... !!! ").is_empty());
        assert!(normalizer().normalize("The and of.").is_empty());
    }

    #[test]
    fn urls_and_money_become_placeholders() {
        let out = normalizer().normalize("Visit http://x.co for $99 deals!");
        assert_eq!(out.len(), 1);
        assert!(out[0].contains(&"#LINK#".to_string()), "{out:?}");
        assert!(out[0].contains(&"#MONEY#".to_string()), "{out:?}");
        assert!(out[0].contains(&"visit".to_string()));
        assert!(out[0].contains(&"deal".to_string()));
    }

    #[test]
    fn numbers_and_spelled_currency() {
        let out = normalizer().normalize("Room 412 cost 120 dollars per night");
        assert_eq!(
            out,
            vec![vec!["room", "#NUMBER#", "cost", "#MONEY#", "per", "night"]]
        );
    }

    #[test]
    fn html_is_stripped_and_sentences_split() {
        let out = normalizer().normalize("<p>Great <b>pool</b>.</p> Terrible staff! Clean rooms?");
        assert_eq!(
            out,
            vec![vec!["great", "pool"], vec!["terribl", "staff"], vec!["clean", "room"]]
        );
    }

    #[test]
    fn abbreviations_do_not_split_sentences() {
        let out = normalizer().normalize("We met Mr. Smith at 5 p.m. near the lobby.");
        assert_eq!(out.len(), 1, "{out:?}");
        assert!(out[0].contains(&"mister".to_string()));
    }

    #[test]
    fn stemming_can_be_disabled() {
        let rules = NormalizationConfig {
            stemming: false,
            ..Default::default()
        };
        let out = normalize_text("Amazing rooms, not amazing views", &rules).unwrap();
        assert_eq!(out, vec![vec!["amazing", "rooms", "not_amazing", "views"]]);
    }

    #[test]
    fn trailing_negator_is_dropped() {
        let out = normalizer().normalize("Breakfast was good, staff not.");
        assert_eq!(out, vec![vec!["breakfast", "good", "staff"]]);
    }

    #[test]
    fn stem_term_only_touches_the_head() {
        let n = normalizer();
        assert_eq!(n.stem_term("not_recommended"), "not_recommend");
        assert_eq!(n.stem_term("amazing"), "amaz");
    }

    #[test]
    fn bad_pattern_is_rejected() {
        let rules = NormalizationConfig {
            placeholders: vec![PlaceholderRule {
                pattern: "(".into(),
                placeholder: "#X#".into(),
            }],
            ..Default::default()
        };
        assert!(Normalizer::new(rules).is_err());
    }

    fn render(sentences: &[Vec<String>]) -> String {
        sentences
            .iter()
            .map(|s| s.join(" "))
            .collect::<Vec<_>>()
            .join(" . ")
    }

    proptest! {
        #[test]
        fn normalization_is_idempotent_without_stemming(
            words in prop::collection::vec(
                prop::sample::select(vec![
                    "no", "not", "nothing", "the", "room", "great", "it", "pool",
                    "staff", "#LINK#", "$20", "42", "view", "bad", ".", "!", "and",
                ]),
                0..40,
            )
        ) {
            let rules = NormalizationConfig { stemming: false, ..Default::default() };
            let n = Normalizer::new(rules).unwrap();
            let once = n.normalize(&words.join(" "));
            let twice = n.normalize(&render(&once));
            prop_assert_eq!(&once, &twice);
            for sentence in &once {
                prop_assert!(!sentence.is_empty());
                for tok in sentence {
                    prop_assert!(!tok.is_empty() && !tok.contains(char::is_whitespace));
                    prop_assert!(!n.stop_words.contains(tok));
                    prop_assert!(!n.negators.contains(tok));
                    if let Some(head) = tok.strip_prefix(NEGATION_PREFIX) {
                        prop_assert!(!head.contains('_') && !head.is_empty());
                    }
                    if !is_placeholder(tok) {
                        prop_assert_eq!(tok.to_lowercase(), tok.clone());
                    }
                }
            }
        }
    }

    #[test]
    fn normalized_text_with_stable_stems_is_fixed_point() {
        let n = normalizer();
        let once = n.normalize("The staff were not helpful. Great pool, no view!");
        assert_eq!(n.normalize(&render(&once)), once);
    }
}
