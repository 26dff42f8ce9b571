use crate::error::{Error, Result};
use crate::WordId;

/// Values this close to zero are treated as exactly zero after a decrement.
pub(crate) const SNAP: f64 = 1e-9;

/// Sufficient statistics of an assignment.
///
/// Word counts are fractional because urn promotion adds `epsilon` mass to
/// related words; sentence counts are integral.
#[derive(Debug, Clone, PartialEq)]
pub struct CountTables {
    pub(crate) num_sentiments: usize,
    pub(crate) num_aspects: usize,
    pub(crate) num_attributes: usize,
    pub(crate) vocab_size: usize,
    pub(crate) num_documents: usize,
    pub(crate) word: Vec<f64>,
    pub(crate) word_total: Vec<f64>,
    pub(crate) aspect: Vec<u32>,
    pub(crate) aspect_total: Vec<u32>,
    pub(crate) sent: Vec<u32>,
    pub(crate) sent_total: Vec<u32>,
}

impl CountTables {
    pub fn zeros(
        num_sentiments: usize,
        num_aspects: usize,
        num_attributes: usize,
        vocab_size: usize,
        num_documents: usize,
    ) -> Self {
        let (s, t, a, w, d) = (num_sentiments, num_aspects, num_attributes, vocab_size, num_documents);
        CountTables {
            num_sentiments: s,
            num_aspects: t,
            num_attributes: a,
            vocab_size: w,
            num_documents: d,
            word: vec![0.0; s * t * w],
            word_total: vec![0.0; s * t],
            aspect: vec![0; s * a * t],
            aspect_total: vec![0; s * a],
            sent: vec![0; d * s],
            sent_total: vec![0; d],
        }
    }

    /// `(S, T, A, W, D)`.
    pub fn shape(&self) -> (usize, usize, usize, usize, usize) {
        (
            self.num_sentiments,
            self.num_aspects,
            self.num_attributes,
            self.vocab_size,
            self.num_documents,
        )
    }

    #[inline]
    pub fn word(&self, s: usize, t: usize, v: WordId) -> f64 {
        self.word[(s * self.num_aspects + t) * self.vocab_size + v as usize]
    }

    pub fn word_row(&self, s: usize, t: usize) -> &[f64] {
        let start = (s * self.num_aspects + t) * self.vocab_size;
        &self.word[start..start + self.vocab_size]
    }

    #[inline]
    pub fn word_total(&self, s: usize, t: usize) -> f64 {
        self.word_total[s * self.num_aspects + t]
    }

    #[inline]
    pub fn aspect(&self, s: usize, a: usize, t: usize) -> u32 {
        self.aspect[(s * self.num_attributes + a) * self.num_aspects + t]
    }

    pub fn aspect_row(&self, s: usize, a: usize) -> &[u32] {
        let start = (s * self.num_attributes + a) * self.num_aspects;
        &self.aspect[start..start + self.num_aspects]
    }

    #[inline]
    pub fn aspect_total(&self, s: usize, a: usize) -> u32 {
        self.aspect_total[s * self.num_attributes + a]
    }

    #[inline]
    pub fn sent(&self, d: usize, s: usize) -> u32 {
        self.sent[d * self.num_sentiments + s]
    }

    pub fn sent_row(&self, d: usize) -> &[u32] {
        &self.sent[d * self.num_sentiments..(d + 1) * self.num_sentiments]
    }

    #[inline]
    pub fn sent_total(&self, d: usize) -> u32 {
        self.sent_total[d]
    }

    pub(crate) fn add_sentence(&mut self, d: usize, a: usize, s: usize, t: usize, deltas: &[(WordId, f64)], mass: f64) {
        let (nt, na, ns, w) = (self.num_aspects, self.num_attributes, self.num_sentiments, self.vocab_size);
        self.sent[d * ns + s] += 1;
        self.sent_total[d] += 1;
        self.aspect[(s * na + a) * nt + t] += 1;
        self.aspect_total[s * na + a] += 1;
        let row = (s * nt + t) * w;
        for &(v, x) in deltas {
            self.word[row + v as usize] += x;
        }
        self.word_total[s * nt + t] += mass;
    }

    pub(crate) fn remove_sentence(
        &mut self,
        d: usize,
        a: usize,
        s: usize,
        t: usize,
        deltas: &[(WordId, f64)],
        mass: f64,
    ) -> Result<()> {
        let (nt, na, ns, w) = (self.num_aspects, self.num_attributes, self.num_sentiments, self.vocab_size);
        let dec = |x: &mut u32, what: &str| -> Result<()> {
            *x = x
                .checked_sub(1)
                .ok_or_else(|| Error::Inconsistent(format!("{what} count would go negative")))?;
            Ok(())
        };
        dec(&mut self.sent[d * ns + s], "document sentiment")?;
        dec(&mut self.sent_total[d], "document total")?;
        dec(&mut self.aspect[(s * na + a) * nt + t], "aspect")?;
        dec(&mut self.aspect_total[s * na + a], "aspect total")?;
        let row = (s * nt + t) * w;
        for &(v, x) in deltas {
            snap_sub(&mut self.word[row + v as usize], x, "word")?;
        }
        snap_sub(&mut self.word_total[s * nt + t], mass, "word total")
    }

    /// Largest absolute difference over every table; infinite on shape mismatch.
    pub fn max_abs_diff(&self, other: &CountTables) -> f64 {
        if self.shape() != other.shape() {
            return f64::INFINITY;
        }
        let f = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        let u = |a: &[u32], b: &[u32]| a.iter().zip(b).map(|(&x, &y)| x.abs_diff(y) as f64).fold(0.0, f64::max);
        f(&self.word, &other.word)
            .max(f(&self.word_total, &other.word_total))
            .max(u(&self.aspect, &other.aspect))
            .max(u(&self.aspect_total, &other.aspect_total))
            .max(u(&self.sent, &other.sent))
            .max(u(&self.sent_total, &other.sent_total))
    }

    /// True when every word count is a whole number.
    pub fn is_integral(&self) -> bool {
        self.word.iter().chain(&self.word_total).all(|x| x.fract() == 0.0)
    }

    /// Checks non-negativity and that every total matches its row.
    pub fn check_invariants(&self, tolerance: f64) -> Result<()> {
        if let Some(x) = self.word.iter().find(|&&x| x < 0.0 || !x.is_finite()) {
            return Err(Error::Inconsistent(format!("word count {x} is negative or non-finite")));
        }
        for s in 0..self.num_sentiments {
            for t in 0..self.num_aspects {
                let sum: f64 = self.word_row(s, t).iter().sum();
                if (sum - self.word_total(s, t)).abs() > tolerance {
                    return Err(Error::Inconsistent(format!(
                        "word total for ({s}, {t}) is {} but the row sums to {sum}",
                        self.word_total(s, t)
                    )));
                }
            }
            for a in 0..self.num_attributes {
                let sum: u32 = self.aspect_row(s, a).iter().sum();
                if sum != self.aspect_total(s, a) {
                    return Err(Error::Inconsistent(format!("aspect total for ({s}, {a}) disagrees")));
                }
            }
        }
        for d in 0..self.num_documents {
            if self.sent_row(d).iter().sum::<u32>() != self.sent_total(d) {
                return Err(Error::Inconsistent(format!("sentiment total for document {d} disagrees")));
            }
        }
        Ok(())
    }
}

fn snap_sub(x: &mut f64, delta: f64, what: &str) -> Result<()> {
    let next = *x - delta;
    if next < -SNAP {
        return Err(Error::Inconsistent(format!("{what} count would become {next}")));
    }
    *x = if next.abs() < SNAP { 0.0 } else { next };
    Ok(())
}
