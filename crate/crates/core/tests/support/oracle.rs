//! Brute-force reference for the sampler, written against plain vectors.
//!
//! The joint is evaluated from its Gamma-function closed forms (word, aspect
//! with the correspondence potential, sentiment) and conditionals are read
//! off a table of every joint assignment.

#![allow(dead_code)]

use rand::Rng;
use statrs::function::gamma::ln_gamma;

/// A tiny model instance. Sentences are listed in document order.
#[derive(Debug, Clone)]
pub struct Toy {
    pub num_sentiments: usize,
    pub num_aspects: usize,
    pub vocab_size: usize,
    pub num_docs: usize,
    pub num_attrs: usize,
    /// Per sentence.
    pub doc: Vec<usize>,
    /// Per document.
    pub doc_attr: Vec<usize>,
    /// Per sentence.
    pub words: Vec<Vec<usize>>,
    /// `[s][v]`.
    pub alpha: Vec<Vec<f64>>,
    pub beta: Vec<f64>,
    pub gamma: Vec<f64>,
    pub lambda: f64,
    pub neighbors: Vec<Vec<usize>>,
    /// Per word: related words and weights.
    pub promotion: Vec<Vec<(usize, f64)>>,
}

/// `(sentiment, aspect)` per sentence.
pub type Labels = Vec<(usize, usize)>;

struct Tallies {
    word: Vec<Vec<Vec<f64>>>,
    aspect: Vec<Vec<Vec<f64>>>,
    sent: Vec<Vec<f64>>,
}

impl Toy {
    pub fn num_sentences(&self) -> usize {
        self.words.len()
    }

    fn tallies(&self, z: &[(usize, usize)], skip: Option<usize>) -> Tallies {
        let (ns, nt) = (self.num_sentiments, self.num_aspects);
        let mut word = vec![vec![vec![0.0; self.vocab_size]; nt]; ns];
        let mut aspect = vec![vec![vec![0.0; nt]; self.num_attrs]; ns];
        let mut sent = vec![vec![0.0; ns]; self.num_docs];
        for (i, &(s, t)) in z.iter().enumerate() {
            if Some(i) == skip {
                continue;
            }
            let d = self.doc[i];
            sent[d][s] += 1.0;
            aspect[s][self.doc_attr[d]][t] += 1.0;
            for &v in &self.words[i] {
                word[s][t][v] += 1.0;
                for &(u, w) in &self.promotion[v] {
                    word[s][t][u] += w;
                }
            }
        }
        Tallies { word, aspect, sent }
    }

    /// Log joint of words, aspects (with the correspondence potential) and
    /// sentiments.
    pub fn log_joint(&self, z: &[(usize, usize)]) -> f64 {
        let (ns, nt) = (self.num_sentiments, self.num_aspects);
        let c = self.tallies(z, None);
        let mut total = 0.0;
        for s in 0..ns {
            let asum: f64 = self.alpha[s].iter().sum();
            let anorm: f64 = self.alpha[s].iter().map(|&a| ln_gamma(a)).sum();
            for t in 0..nt {
                let n: f64 = c.word[s][t].iter().sum();
                total += ln_gamma(asum) - anorm - ln_gamma(n + asum);
                for v in 0..self.vocab_size {
                    total += ln_gamma(c.word[s][t][v] + self.alpha[s][v]);
                }
            }
        }
        let gsum: f64 = self.gamma.iter().sum();
        let gnorm: f64 = self.gamma.iter().map(|&g| ln_gamma(g)).sum();
        for s in 0..ns {
            for a in 0..self.num_attrs {
                let n: f64 = c.aspect[s][a].iter().sum();
                total += ln_gamma(gsum) - gnorm - ln_gamma(n + gsum);
                for t in 0..nt {
                    total += ln_gamma(c.aspect[s][a][t] + self.gamma[t]);
                }
            }
        }
        for (m, l) in self.neighbors.iter().enumerate() {
            if !l.is_empty() {
                let agree = l.iter().filter(|&&j| z[j].1 == z[m].1).count();
                total += self.lambda * agree as f64 / l.len() as f64;
            }
        }
        let bsum: f64 = self.beta.iter().sum();
        let bnorm: f64 = self.beta.iter().map(|&b| ln_gamma(b)).sum();
        for d in 0..self.num_docs {
            let n: f64 = c.sent[d].iter().sum();
            total += ln_gamma(bsum) - bnorm - ln_gamma(n + bsum);
            for s in 0..ns {
                total += ln_gamma(c.sent[d][s] + self.beta[s]);
            }
        }
        total
    }

    fn cells(&self) -> usize {
        self.num_sentiments * self.num_aspects
    }

    fn decode(&self, mut index: usize) -> Labels {
        let (k, nt) = (self.cells(), self.num_aspects);
        (0..self.num_sentences())
            .map(|_| {
                let c = index % k;
                index /= k;
                (c / nt, c % nt)
            })
            .collect()
    }

    fn encode(&self, z: &[(usize, usize)]) -> usize {
        let k = self.cells();
        z.iter()
            .rev()
            .fold(0, |acc, &(s, t)| acc * k + s * self.num_aspects + t)
    }

    /// Log joint of every assignment, indexed in base `S*T` with sentence 0
    /// as the lowest digit.
    pub fn joint_table(&self) -> Vec<f64> {
        let states = self.cells().pow(self.num_sentences() as u32);
        (0..states).map(|k| self.log_joint(&self.decode(k))).collect()
    }

    /// Normalized conditional of sentence `i` read from the joint table.
    pub fn conditional_from_table(&self, table: &[f64], i: usize, z: &[(usize, usize)]) -> Vec<f64> {
        let mut logs = Vec::with_capacity(self.cells());
        let mut probe = z.to_vec();
        for s in 0..self.num_sentiments {
            for t in 0..self.num_aspects {
                probe[i] = (s, t);
                logs.push(table[self.encode(&probe)]);
            }
        }
        normalize_logs(&logs)
    }

    /// Normalized conditional built from Gamma ratios of the other sentences'
    /// counts, treating sentence `i`'s own occurrences as unit increments and
    /// keeping only `i`'s own correspondence term.
    pub fn local_conditional(&self, i: usize, z: &[(usize, usize)]) -> Vec<f64> {
        let c = self.tallies(z, Some(i));
        let d = self.doc[i];
        let a = self.doc_attr[d];
        let mut counts = vec![0usize; self.vocab_size];
        for &v in &self.words[i] {
            counts[v] += 1;
        }
        let len = self.words[i].len() as f64;
        let gsum: f64 = self.gamma.iter().sum();
        let bsum: f64 = self.beta.iter().sum();
        let mut logs = Vec::new();
        for s in 0..self.num_sentiments {
            let asum: f64 = self.alpha[s].iter().sum();
            for t in 0..self.num_aspects {
                let na: f64 = c.aspect[s][a].iter().sum();
                let nd: f64 = c.sent[d].iter().sum();
                let nw: f64 = c.word[s][t].iter().sum();
                let mut x = (c.aspect[s][a][t] + self.gamma[t]).ln() - (na + gsum).ln();
                x += (c.sent[d][s] + self.beta[s]).ln() - (nd + bsum).ln();
                for v in 0..self.vocab_size {
                    let base = c.word[s][t][v] + self.alpha[s][v];
                    x += ln_gamma(base + counts[v] as f64) - ln_gamma(base);
                }
                x -= ln_gamma(nw + asum + len) - ln_gamma(nw + asum);
                let l = &self.neighbors[i];
                if !l.is_empty() {
                    let agree = l.iter().filter(|&&j| z[j].1 == t).count();
                    x += self.lambda * agree as f64 / l.len() as f64;
                }
                logs.push(x);
            }
        }
        normalize_logs(&logs)
    }

    /// A random instance: up to `max_sentences` sentences of 1..=4 words over
    /// `vocab_size` terms, S = T = 2, random positive priors, a random
    /// within-attribute graph with at least one edge when `lambda > 0`, and
    /// random promotions of weight `epsilon` with at least one when
    /// `epsilon > 0`.
    pub fn random<R: Rng>(rng: &mut R, max_sentences: usize, vocab_size: usize, lambda: f64, epsilon: f64) -> Toy {
        loop {
            let n = rng.random_range(2..=max_sentences);
            let num_docs = rng.random_range(1..=n.min(3));
            // Non-decreasing document index per sentence, every document non-empty.
            let mut doc: Vec<usize> = (0..num_docs).collect();
            while doc.len() < n {
                doc.push(rng.random_range(0..num_docs));
            }
            doc.sort_unstable();
            let num_attrs = rng.random_range(1..=num_docs.min(2));
            let mut doc_attr: Vec<usize> = (0..num_docs).map(|d| d % num_attrs).collect();
            doc_attr.sort_unstable();
            let words: Vec<Vec<usize>> = (0..n)
                .map(|_| {
                    let len = rng.random_range(1..=4);
                    (0..len).map(|_| rng.random_range(0..vocab_size)).collect()
                })
                .collect();
            let alpha = (0..2)
                .map(|_| (0..vocab_size).map(|_| rng.random_range(0.05..2.0)).collect())
                .collect();
            let beta = (0..2).map(|_| rng.random_range(0.5..3.0)).collect();
            let gamma = (0..2).map(|_| rng.random_range(0.5..3.0)).collect();

            let mut neighbors = vec![Vec::new(); n];
            for i in 0..n {
                for j in i + 1..n {
                    if doc_attr[doc[i]] == doc_attr[doc[j]] && rng.random_bool(0.5) {
                        neighbors[i].push(j);
                        neighbors[j].push(i);
                    }
                }
            }
            let mut promotion = vec![Vec::new(); vocab_size];
            if epsilon > 0.0 {
                for (v, list) in promotion.iter_mut().enumerate() {
                    for u in 0..vocab_size {
                        if u != v && rng.random_bool(0.4) {
                            list.push((u, epsilon));
                        }
                    }
                }
            }
            let has_edge = neighbors.iter().any(|l| !l.is_empty());
            let has_promotion = promotion.iter().any(|l| !l.is_empty());
            if (lambda > 0.0 && !has_edge) || (epsilon > 0.0 && !has_promotion) {
                continue;
            }
            return Toy {
                num_sentiments: 2,
                num_aspects: 2,
                vocab_size,
                num_docs,
                num_attrs,
                doc,
                doc_attr,
                words,
                alpha,
                beta,
                gamma,
                lambda,
                neighbors,
                promotion,
            };
        }
    }

    pub fn random_labels<R: Rng>(&self, rng: &mut R) -> Labels {
        (0..self.num_sentences())
            .map(|_| {
                (
                    rng.random_range(0..self.num_sentiments),
                    rng.random_range(0..self.num_aspects),
                )
            })
            .collect()
    }
}

pub fn normalize_logs(logs: &[f64]) -> Vec<f64> {
    let top = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logs.iter().map(|&x| (x - top).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|x| x / total).collect()
}

/// Largest `|got - want| / want` over entries.
pub fn max_relative_error(got: &[f64], want: &[f64]) -> f64 {
    got.iter()
        .zip(want)
        .map(|(g, w)| (g - w).abs() / w.abs())
        .fold(0.0, f64::max)
}
