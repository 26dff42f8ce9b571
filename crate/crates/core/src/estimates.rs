//! Posterior point estimates of the word, aspect and sentiment distributions,
//! ranked word lists and per-attribute profiles.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sampler::{Checkpoint, CountTables, Hyperparams, ModelState};

pub const DEFAULT_TOP_WORDS: usize = 20;
pub const DEFAULT_TOP_ASPECTS: usize = 30;

/// Index order of each table, written alongside the numbers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexLayout {
    pub phi: String,
    pub psi: String,
    pub theta: String,
}

impl Default for IndexLayout {
    fn default() -> Self {
        IndexLayout {
            phi: "[sentiment][aspect][word]".into(),
            psi: "[sentiment][attribute][aspect]".into(),
            theta: "[document][sentiment]".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorEstimates {
    pub layout: IndexLayout,
    pub num_sentiments: usize,
    pub num_aspects: usize,
    pub vocabulary: Vec<String>,
    pub attributes: Vec<String>,
    pub document_ids: Vec<String>,
    pub phi: Vec<Vec<Vec<f64>>>,
    pub psi: Vec<Vec<Vec<f64>>>,
    pub theta: Vec<Vec<f64>>,
}

fn normalized(row: impl Iterator<Item = f64>, what: impl FnOnce() -> String) -> Result<Vec<f64>> {
    let row: Vec<f64> = row.collect();
    let total: f64 = row.iter().sum();
    if !(total > 0.0) {
        return Err(Error::Undefined(format!("{} has no mass", what())));
    }
    Ok(row.into_iter().map(|x| x / total).collect())
}

/// `phi[s][t][v]`, proportional to word count plus prior.
pub fn estimate_phi(counts: &CountTables, hyper: &Hyperparams) -> Result<Vec<Vec<Vec<f64>>>> {
    let (ns, nt, _, _, _) = counts.shape();
    (0..ns)
        .map(|s| {
            let alpha = hyper.alpha.row(s);
            (0..nt)
                .map(|t| {
                    let row = counts.word_row(s, t).iter().zip(alpha).map(|(n, a)| n + a);
                    normalized(row, || format!("word distribution ({s}, {t})"))
                })
                .collect()
        })
        .collect()
}

/// `psi[s][a][t]`, proportional to aspect count plus prior.
pub fn estimate_psi(counts: &CountTables, hyper: &Hyperparams) -> Result<Vec<Vec<Vec<f64>>>> {
    let (ns, _, na, _, _) = counts.shape();
    (0..ns)
        .map(|s| {
            (0..na)
                .map(|a| {
                    let row = counts.aspect_row(s, a).iter().zip(&hyper.gamma).map(|(&n, g)| n as f64 + g);
                    normalized(row, || format!("aspect distribution ({s}, attribute {a})"))
                })
                .collect()
        })
        .collect()
}

/// `theta[d][s]`, proportional to sentiment count plus prior. Documents
/// without sentences are rejected.
pub fn estimate_theta(counts: &CountTables, hyper: &Hyperparams) -> Result<Vec<Vec<f64>>> {
    let (_, _, _, _, nd) = counts.shape();
    (0..nd)
        .map(|d| {
            if counts.sent_total(d) == 0 {
                return Err(Error::Undefined(format!("document {d} has no sentences")));
            }
            let row = counts.sent_row(d).iter().zip(&hyper.beta).map(|(&n, b)| n as f64 + b);
            normalized(row, || format!("sentiment distribution of document {d}"))
        })
        .collect()
}

/// The `n` most probable entries of `row` as `(index, probability)`, ties
/// broken by index.
pub fn ranked(row: &[f64], n: usize) -> Vec<(usize, f64)> {
    let mut order: Vec<usize> = (0..row.len()).collect();
    order.sort_by(|&i, &j| row[j].total_cmp(&row[i]).then(i.cmp(&j)));
    order.into_iter().take(n).map(|i| (i, row[i])).collect()
}

impl PosteriorEstimates {
    pub fn from_parts(
        counts: &CountTables,
        hyper: &Hyperparams,
        vocabulary: Vec<String>,
        attributes: Vec<String>,
        document_ids: Vec<String>,
    ) -> Result<Self> {
        let (ns, nt, na, nw, nd) = counts.shape();
        if vocabulary.len() != nw || attributes.len() != na || document_ids.len() != nd {
            return Err(Error::Mismatch("index metadata does not match the count tables".into()));
        }
        if hyper.num_sentiments != ns || hyper.num_aspects != nt || hyper.alpha.vocab_size() != nw {
            return Err(Error::Mismatch("hyperparameters do not match the count tables".into()));
        }
        Ok(PosteriorEstimates {
            layout: IndexLayout::default(),
            num_sentiments: ns,
            num_aspects: nt,
            phi: estimate_phi(counts, hyper)?,
            psi: estimate_psi(counts, hyper)?,
            theta: estimate_theta(counts, hyper)?,
            vocabulary,
            attributes,
            document_ids,
        })
    }

    pub fn from_state(state: &ModelState<'_>) -> Result<Self> {
        let corpus = state.corpus();
        Self::from_parts(
            state.counts(),
            state.hyper(),
            corpus.vocabulary().terms().to_vec(),
            corpus.attributes().values().to_vec(),
            corpus.documents().iter().map(|d| d.id.clone()).collect(),
        )
    }

    pub fn from_checkpoint(checkpoint: &Checkpoint) -> Result<Self> {
        Self::from_parts(
            &checkpoint.counts,
            &checkpoint.hyper,
            checkpoint.vocabulary.clone(),
            checkpoint.attributes.clone(),
            checkpoint.document_ids.clone(),
        )
    }

    /// Top `n` terms of the `(s, t)` word distribution.
    pub fn top_words(&self, s: usize, t: usize, n: usize) -> Vec<(String, f64)> {
        ranked(&self.phi[s][t], n)
            .into_iter()
            .map(|(v, p)| (self.vocabulary[v].clone(), p))
            .collect()
    }

    /// Top `n` terms of every `(s, t)` pair, indexed `s * T + t`.
    pub fn topics(&self, n: usize) -> Vec<Vec<String>> {
        (0..self.num_sentiments)
            .flat_map(|s| (0..self.num_aspects).map(move |t| (s, t)))
            .map(|(s, t)| self.top_words(s, t, n).into_iter().map(|(w, _)| w).collect())
            .collect()
    }

    /// Checks shapes and that every row is a distribution within `tolerance`.
    pub fn check_normalized(&self, tolerance: f64) -> Result<()> {
        let rows = self
            .phi
            .iter()
            .flatten()
            .chain(self.psi.iter().flatten())
            .chain(self.theta.iter());
        for row in rows {
            let total: f64 = row.iter().sum();
            if (total - 1.0).abs() > tolerance || row.iter().any(|&p| !(p >= 0.0)) {
                return Err(Error::Inconsistent(format!("row sums to {total}")));
            }
        }
        Ok(())
    }

    pub fn to_json_writer<W: Write>(&self, w: W) -> Result<()> {
        serde_json::to_writer_pretty(w, self)?;
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut w = BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?);
        self.to_json_writer(&mut w)?;
        w.write_all(b"\n").and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let r = BufReader::new(File::open(path).map_err(|e| Error::io(path, e))?);
        let est: PosteriorEstimates = serde_json::from_reader(r)?;
        est.check_shape()?;
        Ok(est)
    }

    fn check_shape(&self) -> Result<()> {
        let (ns, nt, nw, na) = (self.num_sentiments, self.num_aspects, self.vocabulary.len(), self.attributes.len());
        let ok = self.phi.len() == ns
            && self.phi.iter().all(|r| r.len() == nt && r.iter().all(|x| x.len() == nw))
            && self.psi.len() == ns
            && self.psi.iter().all(|r| r.len() == na && r.iter().all(|x| x.len() == nt))
            && self.theta.len() == self.document_ids.len()
            && self.theta.iter().all(|r| r.len() == ns);
        if ok {
            Ok(())
        } else {
            Err(Error::format("estimates", "table shapes disagree with the index metadata"))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedAspect {
    pub aspect: usize,
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentimentProfile {
    /// Full aspect distribution.
    pub distribution: Vec<f64>,
    pub ranking: Vec<RankedAspect>,
}

/// The aspect distributions of one attribute value, one per sentiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeProfile {
    pub attribute: String,
    pub sentiments: Vec<SentimentProfile>,
}

impl AttributeProfile {
    pub fn num_aspects(&self) -> usize {
        self.sentiments.first().map_or(0, |s| s.distribution.len())
    }
}

/// One profile per attribute value with rankings cut to `top_k`.
pub fn build_profiles(estimates: &PosteriorEstimates, top_k: usize) -> Vec<AttributeProfile> {
    estimates
        .attributes
        .iter()
        .enumerate()
        .map(|(a, value)| AttributeProfile {
            attribute: value.clone(),
            sentiments: (0..estimates.num_sentiments)
                .map(|s| {
                    let row = &estimates.psi[s][a];
                    SentimentProfile {
                        distribution: row.clone(),
                        ranking: ranked(row, top_k)
                            .into_iter()
                            .map(|(aspect, probability)| RankedAspect { aspect, probability })
                            .collect(),
                    }
                })
                .collect(),
        })
        .collect()
}

pub fn save_profiles(profiles: &[AttributeProfile], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?);
    serde_json::to_writer_pretty(&mut w, profiles)?;
    w.write_all(b"\n").and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}

pub fn load_profiles(path: impl AsRef<Path>) -> Result<Vec<AttributeProfile>> {
    let path = path.as_ref();
    let r = BufReader::new(File::open(path).map_err(|e| Error::io(path, e))?);
    Ok(serde_json::from_reader(r)?)
}
