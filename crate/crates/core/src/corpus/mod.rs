//! Attribute-tagged review corpora.

mod io;
mod normalize;
pub mod porter;

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use io::{load_corpus, write_corpus_jsonl, CorpusFormat, LoadOptions};
pub use normalize::{normalize_text, NormalizationConfig, Normalizer, PlaceholderRule, NEGATION_PREFIX};

use crate::error::{Error, Result};
use crate::WordId;

/// A token as seen through the corpus: its surface form and vocabulary index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Token<'a> {
    pub surface: &'a str,
    pub vocab_id: WordId,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sentence {
    pub tokens: Vec<WordId>,
    /// Index of the owning document in the corpus.
    pub doc: usize,
    pub index_in_doc: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub id: String,
    /// Index into the corpus [`AttributeIndex`].
    pub attribute: usize,
    pub rating: Option<u8>,
    pub sentences: Vec<Sentence>,
}

/// Bijection between terms and `[0, W)` with per-term corpus frequencies.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Vocabulary {
    terms: Vec<String>,
    ids: HashMap<String, WordId>,
    frequencies: Vec<u64>,
}

impl Vocabulary {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a vocabulary from distinct terms; ids follow the given order.
    pub fn from_terms<I, S>(terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut vocab = Vocabulary::new();
        for term in terms {
            let term = term.into();
            if vocab.ids.contains_key(&term) {
                return Err(Error::InvalidParameter(format!("duplicate term {term:?}")));
            }
            vocab.intern(&term);
        }
        Ok(vocab)
    }

    /// Returns the id for `term`, assigning the next free id if unseen.
    pub fn intern(&mut self, term: &str) -> WordId {
        if let Some(&id) = self.ids.get(term) {
            return id;
        }
        let id = self.terms.len() as WordId;
        self.terms.push(term.to_string());
        self.ids.insert(term.to_string(), id);
        self.frequencies.push(0);
        id
    }

    pub fn id(&self, term: &str) -> Option<WordId> {
        self.ids.get(term).copied()
    }

    pub fn term(&self, id: WordId) -> &str {
        &self.terms[id as usize]
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn frequency(&self, id: WordId) -> u64 {
        self.frequencies[id as usize]
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    fn bump(&mut self, id: WordId) {
        self.frequencies[id as usize] += 1;
    }
}

/// Bijection between attribute values and `[0, |A|)`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AttributeIndex {
    values: Vec<String>,
    ids: HashMap<String, usize>,
}

impl AttributeIndex {
    pub fn intern(&mut self, value: &str) -> usize {
        if let Some(&id) = self.ids.get(value) {
            return id;
        }
        self.values.push(value.to_string());
        self.ids.insert(value.to_string(), self.values.len() - 1);
        self.values.len() - 1
    }

    pub fn id(&self, value: &str) -> Option<usize> {
        self.ids.get(value).copied()
    }

    pub fn value(&self, id: usize) -> &str {
        &self.values[id]
    }

    pub fn values(&self) -> &[String] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// An indexed corpus. Immutable once built.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    documents: Vec<Document>,
    vocabulary: Vocabulary,
    attributes: AttributeIndex,
    /// Global sentence index → (document, index in document).
    sentence_refs: Vec<(u32, u32)>,
}

impl Corpus {
    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocabulary
    }

    pub fn attributes(&self) -> &AttributeIndex {
        &self.attributes
    }

    pub fn num_documents(&self) -> usize {
        self.documents.len()
    }

    pub fn num_sentences(&self) -> usize {
        self.sentence_refs.len()
    }

    pub fn num_tokens(&self) -> usize {
        self.sentences().map(|s| s.tokens.len()).sum()
    }

    /// Sentence by global index (corpus order).
    pub fn sentence(&self, global: usize) -> &Sentence {
        let (d, i) = self.sentence_refs[global];
        &self.documents[d as usize].sentences[i as usize]
    }

    /// All sentences in corpus order.
    pub fn sentences(&self) -> impl Iterator<Item = &Sentence> {
        self.documents.iter().flat_map(|d| d.sentences.iter())
    }

    pub fn tokens<'a>(&'a self, sentence: &'a Sentence) -> impl Iterator<Item = Token<'a>> + 'a {
        sentence.tokens.iter().map(move |&id| Token {
            surface: self.vocabulary.term(id),
            vocab_id: id,
        })
    }

    /// Embedding key of a sentence: `<doc_id>#<sentence_index>`.
    pub fn sentence_key(&self, global: usize) -> String {
        let s = self.sentence(global);
        format!("{}#{}", self.documents[s.doc].id, s.index_in_doc)
    }

    pub fn attribute_value(&self, doc: &Document) -> &str {
        self.attributes.value(doc.attribute)
    }

    /// Splits documents into two corpora sharing this corpus' vocabulary and
    /// attribute index. `is_second(doc_index)` selects the second corpus.
    pub fn split_by(&self, mut is_second: impl FnMut(usize) -> bool) -> (Corpus, Corpus) {
        let mut first = Vec::new();
        let mut second = Vec::new();
        for (d, doc) in self.documents.iter().enumerate() {
            if is_second(d) {
                second.push(doc.clone());
            } else {
                first.push(doc.clone());
            }
        }
        (
            Corpus::with_shared_index(first, self.vocabulary.clone(), self.attributes.clone()),
            Corpus::with_shared_index(second, self.vocabulary.clone(), self.attributes.clone()),
        )
    }

    /// Holds out `fraction` of each attribute value's documents (at least one
    /// when the value has two or more), chosen by a seeded shuffle.
    /// Returns `(train, test)`.
    pub fn split_per_attribute(&self, fraction: f64, seed: u64) -> (Corpus, Corpus) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut held_out = vec![false; self.documents.len()];
        let mut by_attr: Vec<Vec<usize>> = vec![Vec::new(); self.attributes.len()];
        for (d, doc) in self.documents.iter().enumerate() {
            by_attr[doc.attribute].push(d);
        }
        for docs in &mut by_attr {
            docs.shuffle(&mut rng);
            let mut n = (docs.len() as f64 * fraction).round() as usize;
            if n == 0 && docs.len() >= 2 && fraction > 0.0 {
                n = 1;
            }
            for &d in docs.iter().take(n.min(docs.len().saturating_sub(1))) {
                held_out[d] = true;
            }
        }
        self.split_by(|d| held_out[d])
    }

    fn with_shared_index(
        mut documents: Vec<Document>,
        vocabulary: Vocabulary,
        attributes: AttributeIndex,
    ) -> Corpus {
        let mut sentence_refs = Vec::new();
        for (d, doc) in documents.iter_mut().enumerate() {
            for (i, s) in doc.sentences.iter_mut().enumerate() {
                s.doc = d;
                s.index_in_doc = i;
                sentence_refs.push((d as u32, i as u32));
            }
        }
        Corpus {
            documents,
            vocabulary,
            attributes,
            sentence_refs,
        }
    }
}

/// A document before indexing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawDocument {
    pub id: String,
    pub attribute: String,
    pub rating: Option<u8>,
    pub sentences: Vec<Vec<String>>,
}

/// Assembles a [`Corpus`] from tokenized documents.
///
/// Vocabulary ids and attribute ids are assigned in order of first
/// appearance, so rebuilding from the serialized corpus reproduces them.
#[derive(Debug, Clone)]
pub struct CorpusBuilder {
    documents: Vec<RawDocument>,
    min_count: usize,
    vocabulary: Option<Vocabulary>,
}

impl Default for CorpusBuilder {
    fn default() -> Self {
        Self::new()
    }
}

impl CorpusBuilder {
    pub fn new() -> Self {
        CorpusBuilder {
            documents: Vec::new(),
            min_count: 1,
            vocabulary: None,
        }
    }

    pub fn min_count(mut self, min_count: usize) -> Self {
        self.min_count = min_count.max(1);
        self
    }

    /// Uses a fixed vocabulary (ids preserved, including unused terms).
    /// Tokens outside it are an error. Frequencies are recounted.
    pub fn with_vocabulary(mut self, mut vocabulary: Vocabulary) -> Self {
        vocabulary.frequencies.iter_mut().for_each(|f| *f = 0);
        self.vocabulary = Some(vocabulary);
        self
    }

    pub fn push(&mut self, doc: RawDocument) {
        self.documents.push(doc);
    }

    pub fn build(self) -> Result<Corpus> {
        let mut seen_ids = HashMap::new();
        for (i, doc) in self.documents.iter().enumerate() {
            if seen_ids.insert(doc.id.clone(), i).is_some() {
                return Err(Error::InvalidParameter(format!("duplicate document id {:?}", doc.id)));
            }
        }

        let fixed = self.vocabulary.is_some();
        let mut vocabulary = self.vocabulary.unwrap_or_default();
        let keep: Box<dyn Fn(&str) -> bool> = if fixed {
            Box::new(|_| true)
        } else {
            let mut counts: HashMap<&str, usize> = HashMap::new();
            for doc in &self.documents {
                for tok in doc.sentences.iter().flatten() {
                    *counts.entry(tok.as_str()).or_default() += 1;
                }
            }
            let min = self.min_count;
            let retained: std::collections::HashSet<String> = counts
                .into_iter()
                .filter(|&(_, c)| c >= min)
                .map(|(t, _)| t.to_string())
                .collect();
            Box::new(move |t| retained.contains(t))
        };

        let mut attributes = AttributeIndex::default();
        let mut documents = Vec::with_capacity(self.documents.len());
        let mut dropped = 0usize;
        for raw in self.documents {
            let mut sentences = Vec::new();
            for tokens in &raw.sentences {
                let mut ids = Vec::with_capacity(tokens.len());
                for tok in tokens.iter().filter(|t| keep(t)) {
                    let id = if fixed {
                        vocabulary.id(tok).ok_or_else(|| {
                            Error::InvalidParameter(format!(
                                "token {tok:?} in document {:?} is outside the vocabulary",
                                raw.id
                            ))
                        })?
                    } else {
                        vocabulary.intern(tok)
                    };
                    vocabulary.bump(id);
                    ids.push(id);
                }
                if !ids.is_empty() {
                    sentences.push(Sentence {
                        tokens: ids,
                        doc: 0,
                        index_in_doc: 0,
                    });
                }
            }
            if sentences.is_empty() {
                dropped += 1;
                continue;
            }
            let attribute = attributes.intern(&raw.attribute);
            documents.push(Document {
                id: raw.id,
                attribute,
                rating: raw.rating,
                sentences,
            });
        }
        if dropped > 0 {
            log::info!("dropped {dropped} documents with no retained tokens");
        }
        if vocabulary.is_empty() {
            return Err(Error::InvalidParameter("corpus has an empty vocabulary".into()));
        }
        Ok(Corpus::with_shared_index(documents, vocabulary, attributes))
    }
}

/// Sentences sharing one attribute value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttributePartition {
    pub attribute: usize,
    pub value: String,
    /// Global sentence indices in corpus order.
    pub sentences: Vec<usize>,
}

/// Groups every sentence by its document's attribute value, in attribute-id order.
pub fn partition_by_attribute(corpus: &Corpus) -> Vec<AttributePartition> {
    let mut parts: Vec<AttributePartition> = corpus
        .attributes()
        .values()
        .iter()
        .enumerate()
        .map(|(attribute, value)| AttributePartition {
            attribute,
            value: value.clone(),
            sentences: Vec::new(),
        })
        .collect();
    let mut global = 0;
    for doc in corpus.documents() {
        for _ in &doc.sentences {
            parts[doc.attribute].sentences.push(global);
            global += 1;
        }
    }
    parts
}
