//! JSONL corpus files.
//!
//! One document per line, either raw (`text`) or pre-tokenized (`sentences`):
//!
//! ```text
//! {"id": "r1", "attribute": "Boston", "rating": 4, "text": "Great location."}
//! {"id": "r1", "attribute": "Boston", "rating": 4, "sentences": [["great", "locat"]]}
//! ```

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use serde_json::{json, Map, Value};

use super::{Corpus, CorpusBuilder, NormalizationConfig, Normalizer, RawDocument};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CorpusFormat {
    /// Each record carries raw `text` that is normalized on load.
    Raw,
    /// Each record carries `sentences` as arrays of tokens.
    Tokenized,
    /// Decide per record from the fields present.
    #[default]
    Auto,
}

#[derive(Debug, Clone, Default)]
pub struct LoadOptions {
    pub format: CorpusFormat,
    pub normalization: NormalizationConfig,
}

enum Body {
    Text(String),
    Sentences(Vec<Vec<String>>),
}

struct Record {
    id: String,
    attribute: String,
    rating: Option<u8>,
    body: Body,
}

fn parse_record(line: &str, lineno: usize, format: CorpusFormat) -> Result<Record> {
    let err = |message: String| Error::Record {
        line: lineno,
        message,
    };
    let value: Value = serde_json::from_str(line).map_err(|e| err(format!("invalid JSON: {e}")))?;
    let obj = value
        .as_object()
        .ok_or_else(|| err("record is not a JSON object".into()))?;
    let string_field = |obj: &Map<String, Value>, name: &str| -> Result<String> {
        match obj.get(name) {
            Some(Value::String(s)) => Ok(s.clone()),
            Some(other) => Err(err(format!("field `{name}` must be a string, got {other}"))),
            None => Err(err(format!("missing field `{name}`"))),
        }
    };
    let id = string_field(obj, "id")?;
    let attribute = string_field(obj, "attribute")?;
    if attribute.is_empty() {
        return Err(err("field `attribute` is empty".into()));
    }
    let rating = match obj.get("rating") {
        None | Some(Value::Null) => None,
        Some(Value::Number(n)) => match n.as_u64() {
            Some(r @ 1..=5) => Some(r as u8),
            _ => return Err(err(format!("rating must be an integer in 1..=5, got {n}"))),
        },
        Some(other) => return Err(err(format!("rating must be an integer or null, got {other}"))),
    };

    let has_text = obj.contains_key("text");
    let has_sentences = obj.contains_key("sentences");
    let use_text = match format {
        CorpusFormat::Raw => true,
        CorpusFormat::Tokenized => false,
        CorpusFormat::Auto => match (has_text, has_sentences) {
            (true, false) => true,
            (false, true) => false,
            (true, true) => return Err(err("record has both `text` and `sentences`".into())),
            (false, false) => return Err(err("record has neither `text` nor `sentences`".into())),
        },
    };
    let body = if use_text {
        Body::Text(string_field(obj, "text")?)
    } else {
        let sentences = obj
            .get("sentences")
            .ok_or_else(|| err("missing field `sentences`".into()))?;
        let sentences: Vec<Vec<String>> = serde_json::from_value(sentences.clone())
            .map_err(|e| err(format!("`sentences` must be an array of token arrays: {e}")))?;
        for tok in sentences.iter().flatten() {
            if tok.is_empty() || tok.contains(char::is_whitespace) {
                return Err(err(format!("invalid token {tok:?}")));
            }
        }
        Body::Sentences(sentences)
    };
    Ok(Record {
        id,
        attribute,
        rating,
        body,
    })
}

/// Loads and indexes a JSONL corpus. Raw records are normalized in parallel.
pub fn load_corpus(path: impl AsRef<Path>, options: &LoadOptions) -> Result<Corpus> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut records = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        records.push(parse_record(&line, i + 1, options.format)?);
    }

    let normalizer = Normalizer::new(options.normalization.clone())?;
    let documents: Vec<RawDocument> = records
        .into_par_iter()
        .map(|r| RawDocument {
            id: r.id,
            attribute: r.attribute,
            rating: r.rating,
            sentences: match r.body {
                Body::Text(text) => normalizer.normalize(&text),
                Body::Sentences(s) => s,
            },
        })
        .collect();

    let mut builder = CorpusBuilder::new().min_count(options.normalization.min_count);
    for doc in documents {
        builder.push(doc);
    }
    builder.build()
}

/// Writes the corpus in pre-tokenized form.
pub fn write_corpus_jsonl(corpus: &Corpus, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for doc in corpus.documents() {
        let sentences: Vec<Vec<&str>> = doc
            .sentences
            .iter()
            .map(|s| corpus.tokens(s).map(|t| t.surface).collect())
            .collect();
        let record = json!({
            "id": doc.id,
            "attribute": corpus.attribute_value(doc),
            "rating": doc.rating,
            "sentences": sentences,
        });
        writeln!(w, "{record}").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
