use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::function::gamma::ln_gamma;

use super::counts::CountTables;
use super::hyper::Hyperparams;
use super::sample_assignment;
use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::graph::{CorrespondenceGraph, PromotionTable};
use crate::WordId;

/// Sentences longer than this use the log-space word factor.
pub(crate) const DIRECT_PRODUCT_MAX_LEN: usize = 20;
/// Sweeps between full count audits.
pub const AUDIT_INTERVAL: u64 = 100;
/// Largest tolerated drift between incremental and rebuilt counts.
pub const DRIFT_TOLERANCE: f64 = 1e-6;

/// Current `(sentiment, aspect)` of every sentence, by global sentence index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assignment {
    pub(crate) sentiment: Vec<u16>,
    pub(crate) aspect: Vec<u16>,
}

impl Assignment {
    pub fn new(sentiment: Vec<u16>, aspect: Vec<u16>) -> Result<Self> {
        if sentiment.len() != aspect.len() {
            return Err(Error::DimensionMismatch {
                expected: sentiment.len(),
                actual: aspect.len(),
            });
        }
        Ok(Assignment { sentiment, aspect })
    }

    pub fn len(&self) -> usize {
        self.sentiment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentiment.is_empty()
    }

    #[inline]
    pub fn sentiment(&self, i: usize) -> usize {
        self.sentiment[i] as usize
    }

    #[inline]
    pub fn aspect(&self, i: usize) -> usize {
        self.aspect[i] as usize
    }

    pub fn sentiments(&self) -> &[u16] {
        &self.sentiment
    }

    pub fn aspects(&self) -> &[u16] {
        &self.aspect
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Add,
    Remove,
}

/// Per-sentence data precomputed from the corpus and promotion table.
#[derive(Debug, Clone)]
pub(crate) struct SentenceLayout {
    pub doc: usize,
    pub attribute: usize,
    /// Distinct words with in-sentence multiplicity, ascending by id.
    pub words: Vec<(WordId, u32)>,
    pub len: usize,
    /// Word-count change caused by this sentence, own and promoted mass merged.
    pub deltas: Vec<(WordId, f64)>,
    pub mass: f64,
}

pub(crate) fn sentence_layouts(corpus: &Corpus, promotion: &PromotionTable) -> Vec<SentenceLayout> {
    corpus
        .sentences()
        .map(|sentence| {
            let mut sorted = sentence.tokens.clone();
            sorted.sort_unstable();
            let mut words: Vec<(WordId, u32)> = Vec::new();
            for v in sorted {
                match words.last_mut() {
                    Some((last, c)) if *last == v => *c += 1,
                    _ => words.push((v, 1)),
                }
            }
            let mut deltas: Vec<(WordId, f64)> = Vec::new();
            let mut mass = 0.0;
            for &(v, c) in &words {
                deltas.push((v, c as f64));
                mass += c as f64;
                for &(u, weight) in promotion.related(v) {
                    deltas.push((u, weight * c as f64));
                    mass += weight * c as f64;
                }
            }
            deltas.sort_by_key(|&(v, _)| v);
            let mut merged: Vec<(WordId, f64)> = Vec::with_capacity(deltas.len());
            for (v, x) in deltas {
                match merged.last_mut() {
                    Some((last, acc)) if *last == v => *acc += x,
                    _ => merged.push((v, x)),
                }
            }
            SentenceLayout {
                doc: sentence.doc,
                attribute: corpus.documents()[sentence.doc].attribute,
                len: sentence.tokens.len(),
                words,
                deltas: merged,
                mass,
            }
        })
        .collect()
}

/// Outcome of one sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SweepStats {
    /// Sentences whose `(sentiment, aspect)` changed.
    pub changed: usize,
}

/// A single Gibbs chain over a fixed corpus, graph and promotion table.
pub struct ModelState<'a> {
    pub(crate) corpus: &'a Corpus,
    pub(crate) graph: &'a CorrespondenceGraph,
    pub(crate) promotion: &'a PromotionTable,
    pub(crate) hyper: Hyperparams,
    pub(crate) layout: Vec<SentenceLayout>,
    pub(crate) assignment: Assignment,
    pub(crate) counts: CountTables,
    pub(crate) rng: ChaCha8Rng,
    pub(crate) sweeps_done: u64,
    detached: Option<usize>,
    beta_sum: f64,
    gamma_sum: f64,
}

impl<'a> ModelState<'a> {
    /// Draws every sentence's `(s, t)` uniformly from the seeded generator
    /// and accumulates counts. The sentiment is drawn among those whose prior
    /// gives the sentence's words the fewest zero entries, so a zero prior
    /// never starts out with counts.
    pub fn init(
        corpus: &'a Corpus,
        graph: &'a CorrespondenceGraph,
        promotion: &'a PromotionTable,
        hyper: Hyperparams,
    ) -> Result<Self> {
        check_inputs(corpus, graph, promotion, &hyper)?;
        let mut rng = ChaCha8Rng::seed_from_u64(hyper.seed);
        let n = corpus.num_sentences();
        let mut sentiment = Vec::with_capacity(n);
        let mut aspect = Vec::with_capacity(n);
        let mut zeros = vec![0usize; hyper.num_sentiments];
        let mut allowed = Vec::with_capacity(hyper.num_sentiments);
        for sentence in corpus.sentences() {
            for (s, z) in zeros.iter_mut().enumerate() {
                *z = sentence.tokens.iter().filter(|&&v| hyper.alpha.get(s, v) == 0.0).count();
            }
            let fewest = zeros.iter().copied().min().unwrap_or(0);
            allowed.clear();
            allowed.extend((0..hyper.num_sentiments).filter(|&s| zeros[s] == fewest));
            sentiment.push(allowed[rng.random_range(0..allowed.len())] as u16);
            aspect.push(rng.random_range(0..hyper.num_aspects) as u16);
        }
        let mut state = Self::assemble(corpus, graph, promotion, hyper, Assignment { sentiment, aspect }, rng);
        state.accumulate_counts();
        Ok(state)
    }

    /// Builds a state around a given assignment; the generator is seeded
    /// from `hyper.seed`.
    pub fn from_assignment(
        corpus: &'a Corpus,
        graph: &'a CorrespondenceGraph,
        promotion: &'a PromotionTable,
        hyper: Hyperparams,
        assignment: Assignment,
    ) -> Result<Self> {
        check_inputs(corpus, graph, promotion, &hyper)?;
        check_assignment(&assignment, corpus, &hyper)?;
        let rng = ChaCha8Rng::seed_from_u64(hyper.seed);
        let mut state = Self::assemble(corpus, graph, promotion, hyper, assignment, rng);
        state.accumulate_counts();
        Ok(state)
    }

    pub(crate) fn assemble(
        corpus: &'a Corpus,
        graph: &'a CorrespondenceGraph,
        promotion: &'a PromotionTable,
        hyper: Hyperparams,
        assignment: Assignment,
        rng: ChaCha8Rng,
    ) -> Self {
        let counts = CountTables::zeros(
            hyper.num_sentiments,
            hyper.num_aspects,
            corpus.attributes().len(),
            corpus.vocabulary().len(),
            corpus.num_documents(),
        );
        ModelState {
            corpus,
            graph,
            promotion,
            layout: sentence_layouts(corpus, promotion),
            beta_sum: hyper.beta.iter().sum(),
            gamma_sum: hyper.gamma.iter().sum(),
            hyper,
            assignment,
            counts,
            rng,
            sweeps_done: 0,
            detached: None,
        }
    }

    fn accumulate_counts(&mut self) {
        for (i, l) in self.layout.iter().enumerate() {
            let (s, t) = (self.assignment.sentiment(i), self.assignment.aspect(i));
            self.counts.add_sentence(l.doc, l.attribute, s, t, &l.deltas, l.mass);
        }
    }

    pub fn corpus(&self) -> &'a Corpus {
        self.corpus
    }

    pub fn graph(&self) -> &'a CorrespondenceGraph {
        self.graph
    }

    pub fn promotion(&self) -> &'a PromotionTable {
        self.promotion
    }

    pub fn hyper(&self) -> &Hyperparams {
        &self.hyper
    }

    pub fn assignment(&self) -> &Assignment {
        &self.assignment
    }

    pub fn counts(&self) -> &CountTables {
        &self.counts
    }

    pub fn sweeps_done(&self) -> u64 {
        self.sweeps_done
    }

    pub fn rng(&self) -> &ChaCha8Rng {
        &self.rng
    }

    /// `exp(lambda * k / |L_i|)` where `k` neighbors of `i` currently hold
    /// aspect `t`; exactly 1 when `i` has no neighbors.
    pub fn mrf_bonus(&self, i: usize, t: usize) -> f64 {
        let neighbors = self.graph.neighbors(i);
        if neighbors.is_empty() {
            return 1.0;
        }
        let agree = neighbors
            .iter()
            .filter(|&&j| self.assignment.aspect(j as usize) == t)
            .count();
        (self.hyper.lambda * agree as f64 / neighbors.len() as f64).exp()
    }

    /// [`Self::mrf_bonus`] for every aspect, counting neighbors once.
    fn mrf_bonuses(&self, i: usize) -> Vec<f64> {
        let nt = self.hyper.num_aspects;
        let neighbors = self.graph.neighbors(i);
        if neighbors.is_empty() {
            return vec![1.0; nt];
        }
        let mut agree = vec![0usize; nt];
        for &j in neighbors {
            agree[self.assignment.aspect(j as usize)] += 1;
        }
        let scale = self.hyper.lambda / neighbors.len() as f64;
        agree.into_iter().map(|k| (scale * k as f64).exp()).collect()
    }

    /// Applies or withdraws sentence `i`'s contribution under `(s, t)`.
    ///
    /// `Remove` must name the sentence's current assignment and leaves the
    /// sentence detached; `Add` re-attaches it with the new assignment.
    pub fn update_counts(&mut self, i: usize, s: usize, t: usize, direction: Direction) -> Result<()> {
        if i >= self.layout.len() || s >= self.hyper.num_sentiments || t >= self.hyper.num_aspects {
            return Err(Error::InvalidParameter(format!("sentence {i} or label ({s}, {t}) out of range")));
        }
        match direction {
            Direction::Remove => {
                if self.detached.is_some() {
                    return Err(Error::Inconsistent("another sentence is already detached".into()));
                }
                if (self.assignment.sentiment(i), self.assignment.aspect(i)) != (s, t) {
                    return Err(Error::Inconsistent(format!(
                        "sentence {i} is not assigned ({s}, {t})"
                    )));
                }
                self.remove(i)?;
                self.detached = Some(i);
            }
            Direction::Add => {
                if self.detached != Some(i) {
                    return Err(Error::Inconsistent(format!("sentence {i} is not detached")));
                }
                self.add(i, s, t);
                self.detached = None;
            }
        }
        Ok(())
    }

    fn remove(&mut self, i: usize) -> Result<()> {
        let l = &self.layout[i];
        let (s, t) = (self.assignment.sentiment(i), self.assignment.aspect(i));
        self.counts.remove_sentence(l.doc, l.attribute, s, t, &l.deltas, l.mass)
    }

    fn add(&mut self, i: usize, s: usize, t: usize) {
        let l = &self.layout[i];
        self.counts.add_sentence(l.doc, l.attribute, s, t, &l.deltas, l.mass);
        self.assignment.sentiment[i] = s as u16;
        self.assignment.aspect[i] = t as u16;
    }

    /// Unnormalized `S × T` conditional for sentence `i` (row-major by
    /// sentiment). Requires `i` to be detached via [`Direction::Remove`].
    ///
    /// Entries may share a common positive scale when the log-space path is used.
    pub fn gibbs_conditional(&self, i: usize) -> Result<Vec<f64>> {
        if self.detached != Some(i) {
            return Err(Error::Inconsistent(format!(
                "sentence {i} must be removed from the counts before its conditional is evaluated"
            )));
        }
        let mut out = vec![0.0; self.hyper.num_sentiments * self.hyper.num_aspects];
        self.fill_conditional(i, &mut out);
        Ok(out)
    }

    fn fill_conditional(&self, i: usize, out: &mut [f64]) {
        let l = &self.layout[i];
        let bonus = self.mrf_bonuses(i);
        let cells = CellInputs {
            counts: &self.counts,
            hyper: &self.hyper,
            beta_sum: self.beta_sum,
            gamma_sum: self.gamma_sum,
            sent_row: self.counts.sent_row(l.doc),
            sent_total: self.counts.sent_total(l.doc),
            attribute: l.attribute,
            words: &l.words,
            len: l.len,
            bonus: &bonus,
        };
        cells.fill(out);
    }

    /// Resamples every sentence once, in corpus order.
    pub fn gibbs_sweep(&mut self) -> Result<SweepStats> {
        if self.detached.is_some() {
            return Err(Error::Inconsistent("cannot sweep while a sentence is detached".into()));
        }
        let nt = self.hyper.num_aspects;
        let mut buf = vec![0.0; self.hyper.num_sentiments * nt];
        let mut changed = 0;
        for i in 0..self.layout.len() {
            let before = (self.assignment.sentiment[i], self.assignment.aspect[i]);
            self.remove(i)?;
            self.fill_conditional(i, &mut buf);
            let k = sample_assignment(&buf, &mut self.rng)?;
            let (s, t) = (k / nt, k % nt);
            self.add(i, s, t);
            if before != (s as u16, t as u16) {
                changed += 1;
            }
        }
        self.sweeps_done += 1;
        if self.sweeps_done % AUDIT_INTERVAL == 0 {
            self.audit()?;
        }
        Ok(SweepStats { changed })
    }

    /// Compares incremental counts with a rebuild. Fractional tables are
    /// replaced by the rebuild to shed accumulated rounding.
    fn audit(&mut self) -> Result<()> {
        let rebuilt = self.rebuild_counts();
        let drift = self.counts.max_abs_diff(&rebuilt);
        if drift > DRIFT_TOLERANCE {
            return Err(Error::Inconsistent(format!(
                "count drift {drift:e} after {} sweeps",
                self.sweeps_done
            )));
        }
        if drift > 0.0 {
            log::debug!("resynchronising counts (drift {drift:e})");
            self.counts = rebuilt;
        }
        Ok(())
    }

    /// Recomputes every table from the assignment, token by token.
    pub fn rebuild_counts(&self) -> CountTables {
        let (ns, nt) = (self.hyper.num_sentiments, self.hyper.num_aspects);
        let mut c = CountTables::zeros(
            ns,
            nt,
            self.corpus.attributes().len(),
            self.corpus.vocabulary().len(),
            self.corpus.num_documents(),
        );
        let w = c.vocab_size;
        for (i, sentence) in self.corpus.sentences().enumerate() {
            let (s, t) = (self.assignment.sentiment(i), self.assignment.aspect(i));
            let d = sentence.doc;
            let a = self.corpus.documents()[d].attribute;
            c.sent[d * ns + s] += 1;
            c.sent_total[d] += 1;
            c.aspect[(s * c.num_attributes + a) * nt + t] += 1;
            c.aspect_total[s * c.num_attributes + a] += 1;
            let row = (s * nt + t) * w;
            for &v in &sentence.tokens {
                c.word[row + v as usize] += 1.0;
                c.word_total[s * nt + t] += 1.0;
                for &(u, weight) in self.promotion.related(v) {
                    c.word[row + u as usize] += weight;
                    c.word_total[s * nt + t] += weight;
                }
            }
        }
        c
    }

    /// Largest difference between incremental and rebuilt counts.
    pub fn count_drift(&self) -> f64 {
        self.counts.max_abs_diff(&self.rebuild_counts())
    }

    /// Log of the collapsed joint over words, aspects and sentiments plus the
    /// correspondence potential, evaluated at the current counts.
    ///
    /// Zero-valued prior entries are treated as improper: their normalizer
    /// is omitted rather than contributing `-inf`.
    pub fn log_joint(&self) -> f64 {
        let (ns, nt) = (self.hyper.num_sentiments, self.hyper.num_aspects);
        let c = &self.counts;
        let mut total = 0.0;

        for s in 0..ns {
            let alpha_sum = self.hyper.alpha.sum(s);
            for t in 0..nt {
                total += ln_gamma(alpha_sum) - ln_gamma(c.word_total(s, t) + alpha_sum);
                for (v, &n) in c.word_row(s, t).iter().enumerate() {
                    if n > 0.0 {
                        let a = self.hyper.alpha.get(s, v as WordId);
                        total += ln_gamma(n + a);
                        if a > 0.0 {
                            total -= ln_gamma(a);
                        }
                    }
                }
            }
        }

        let gamma_norm: f64 = self.hyper.gamma.iter().map(|&g| ln_gamma(g)).sum();
        for s in 0..ns {
            for a in 0..c.num_attributes {
                total += ln_gamma(self.gamma_sum) - gamma_norm
                    - ln_gamma(c.aspect_total(s, a) as f64 + self.gamma_sum);
                for t in 0..nt {
                    total += ln_gamma(c.aspect(s, a, t) as f64 + self.hyper.gamma[t]);
                }
            }
        }

        let beta_norm: f64 = self.hyper.beta.iter().map(|&b| ln_gamma(b)).sum();
        for d in 0..c.num_documents {
            total += ln_gamma(self.beta_sum) - beta_norm - ln_gamma(c.sent_total(d) as f64 + self.beta_sum);
            for s in 0..ns {
                total += ln_gamma(c.sent(d, s) as f64 + self.hyper.beta[s]);
            }
        }

        if self.hyper.lambda > 0.0 {
            for m in 0..self.layout.len() {
                let neighbors = self.graph.neighbors(m);
                if neighbors.is_empty() {
                    continue;
                }
                let tm = self.assignment.aspect(m);
                let agree = neighbors.iter().filter(|&&j| self.assignment.aspect(j as usize) == tm).count();
                total += self.hyper.lambda * agree as f64 / neighbors.len() as f64;
            }
        }
        total
    }
}

pub(crate) fn check_inputs(
    corpus: &Corpus,
    graph: &CorrespondenceGraph,
    promotion: &PromotionTable,
    hyper: &Hyperparams,
) -> Result<()> {
    hyper.validate(corpus.vocabulary().len())?;
    if graph.num_sentences() != corpus.num_sentences() {
        return Err(Error::Mismatch(format!(
            "graph covers {} sentences but the corpus has {}",
            graph.num_sentences(),
            corpus.num_sentences()
        )));
    }
    if promotion.vocab_size() != corpus.vocabulary().len() {
        return Err(Error::Mismatch(format!(
            "promotion table covers {} terms but the vocabulary has {}",
            promotion.vocab_size(),
            corpus.vocabulary().len()
        )));
    }
    for v in 0..promotion.vocab_size() as WordId {
        if let Some(&(_, w)) = promotion.related(v).iter().find(|&&(_, w)| w != hyper.epsilon) {
            return Err(Error::Mismatch(format!(
                "promotion weight {w} differs from epsilon {}",
                hyper.epsilon
            )));
        }
    }
    Ok(())
}

pub(crate) fn check_assignment(assignment: &Assignment, corpus: &Corpus, hyper: &Hyperparams) -> Result<()> {
    if assignment.len() != corpus.num_sentences() {
        return Err(Error::Mismatch(format!(
            "assignment covers {} sentences but the corpus has {}",
            assignment.len(),
            corpus.num_sentences()
        )));
    }
    let bad_s = assignment.sentiment.iter().any(|&s| s as usize >= hyper.num_sentiments);
    let bad_t = assignment.aspect.iter().any(|&t| t as usize >= hyper.num_aspects);
    if bad_s || bad_t {
        return Err(Error::InvalidParameter("assignment label out of range".into()));
    }
    Ok(())
}

/// Everything one conditional evaluation reads.
pub(crate) struct CellInputs<'c> {
    pub counts: &'c CountTables,
    pub hyper: &'c Hyperparams,
    pub beta_sum: f64,
    pub gamma_sum: f64,
    /// Sentiment counts of the sentence's document, without the sentence.
    pub sent_row: &'c [u32],
    pub sent_total: u32,
    pub attribute: usize,
    pub words: &'c [(WordId, u32)],
    pub len: usize,
    pub bonus: &'c [f64],
}

impl CellInputs<'_> {
    pub fn fill(&self, out: &mut [f64]) {
        let (c, h) = (self.counts, self.hyper);
        let nt = h.num_aspects;
        if self.len <= DIRECT_PRODUCT_MAX_LEN {
            let sent_den = self.sent_total as f64 + self.beta_sum;
            for s in 0..h.num_sentiments {
                let sf = (self.sent_row[s] as f64 + h.beta[s]) / sent_den;
                let asp_den = c.aspect_total(s, self.attribute) as f64 + self.gamma_sum;
                let alpha_sum = h.alpha.sum(s);
                for t in 0..nt {
                    let af = (c.aspect(s, self.attribute, t) as f64 + h.gamma[t]) / asp_den;
                    let mut num = 1.0;
                    for &(v, n) in self.words {
                        let base = c.word(s, t, v) + h.alpha.get(s, v);
                        for k in 0..n {
                            num *= base + k as f64;
                        }
                    }
                    let base = c.word_total(s, t) + alpha_sum;
                    let mut den = 1.0;
                    for k in 0..self.len {
                        den *= base + k as f64;
                    }
                    out[s * nt + t] = af * sf * (num / den) * self.bonus[t];
                }
            }
            let total: f64 = out.iter().sum();
            if total > 0.0 && total.is_finite() {
                return;
            }
        }
        self.fill_log(out);
    }

    /// Log-space evaluation. Cells whose word factor has exact zeros (a zero
    /// prior with a zero count) are ranked by how many zero factors they
    /// carry, which is the limit of a vanishing positive prior; only cells
    /// with the fewest zeros keep mass.
    fn fill_log(&self, out: &mut [f64]) {
        let (c, h) = (self.counts, self.hyper);
        let nt = h.num_aspects;
        let cells = h.num_sentiments * nt;
        let mut zeros = vec![0u32; cells];
        let mut logs = vec![0.0; cells];
        let sent_den = (self.sent_total as f64 + self.beta_sum).ln();
        for s in 0..h.num_sentiments {
            let sf = (self.sent_row[s] as f64 + h.beta[s]).ln() - sent_den;
            let asp_den = (c.aspect_total(s, self.attribute) as f64 + self.gamma_sum).ln();
            let alpha_sum = h.alpha.sum(s);
            for t in 0..nt {
                let cell = s * nt + t;
                let mut acc = sf + (c.aspect(s, self.attribute, t) as f64 + h.gamma[t]).ln() - asp_den
                    + self.bonus[t].ln();
                for &(v, n) in self.words {
                    let base = c.word(s, t, v) + h.alpha.get(s, v);
                    for k in 0..n {
                        let x = base + k as f64;
                        if x > 0.0 {
                            acc += x.ln();
                        } else {
                            zeros[cell] += 1;
                        }
                    }
                }
                let base = c.word_total(s, t) + alpha_sum;
                for k in 0..self.len {
                    acc -= (base + k as f64).ln();
                }
                logs[cell] = acc;
            }
        }
        let fewest = *zeros.iter().min().expect("at least one cell");
        let top = (0..cells)
            .filter(|&k| zeros[k] == fewest)
            .map(|k| logs[k])
            .fold(f64::NEG_INFINITY, f64::max);
        for k in 0..cells {
            out[k] = if zeros[k] == fewest { (logs[k] - top).exp() } else { 0.0 };
        }
    }
}
