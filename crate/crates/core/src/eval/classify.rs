use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::sampler::POSITIVE;

/// Ratings at or above this value are positive.
pub const POSITIVE_RATING_THRESHOLD: u8 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub sentiment: usize,
    /// Probability of the positive sentiment.
    pub score: f64,
}

impl Prediction {
    pub fn is_positive(&self) -> bool {
        self.sentiment == POSITIVE
    }
}

/// Argmax of each row; ties go to the lowest index, i.e. positive.
pub fn classify_documents(theta: &[Vec<f64>]) -> Vec<Prediction> {
    theta
        .iter()
        .map(|row| {
            let mut best = 0;
            for (s, &p) in row.iter().enumerate() {
                if p > row[best] {
                    best = s;
                }
            }
            Prediction {
                sentiment: best,
                score: row[POSITIVE],
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundTruth {
    /// `Some(true)` for positive; `None` when the rating is missing.
    pub labels: Vec<Option<bool>>,
    pub excluded: usize,
}

pub fn ground_truth_labels(corpus: &Corpus) -> GroundTruth {
    let labels: Vec<Option<bool>> = corpus
        .documents()
        .iter()
        .map(|d| d.rating.map(|r| r >= POSITIVE_RATING_THRESHOLD))
        .collect();
    GroundTruth {
        excluded: labels.iter().filter(|l| l.is_none()).count(),
        labels,
    }
}

/// Rank-sum AUC: the probability that a random positive outscores a random
/// negative, ties counting one half.
pub fn auc_roc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: labels.len(),
            actual: scores.len(),
        });
    }
    if scores.iter().any(|x| x.is_nan()) {
        return Err(Error::InvalidParameter("AUC scores must not be NaN".into()));
    }
    let positives = labels.iter().filter(|&&l| l).count();
    let negatives = labels.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::Undefined("AUC needs both positive and negative labels".into()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&i, &j| scores[i].total_cmp(&scores[j]));
    // Average 1-based ranks over tied runs.
    let mut rank_sum = 0.0;
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && scores[order[end]] == scores[order[start]] {
            end += 1;
        }
        let mid = (start + 1 + end) as f64 / 2.0;
        rank_sum += mid * order[start..end].iter().filter(|&&k| labels[k]).count() as f64;
        start = end;
    }
    let (p, n) = (positives as f64, negatives as f64);
    Ok((rank_sum - p * (p + 1.0) / 2.0) / (p * n))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub accuracy: f64,
    pub auc: f64,
    pub true_positive: usize,
    pub true_negative: usize,
    pub false_positive: usize,
    pub false_negative: usize,
    /// Documents without a label.
    pub excluded: usize,
}

/// Scores argmax-θ predictions against the labelled documents.
pub fn evaluate_classification(theta: &[Vec<f64>], labels: &[Option<bool>]) -> Result<ClassificationReport> {
    if theta.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: labels.len(),
            actual: theta.len(),
        });
    }
    let predictions = classify_documents(theta);
    let mut report = ClassificationReport {
        accuracy: 0.0,
        auc: 0.0,
        true_positive: 0,
        true_negative: 0,
        false_positive: 0,
        false_negative: 0,
        excluded: 0,
    };
    let mut scores = Vec::new();
    let mut truth = Vec::new();
    for (p, label) in predictions.iter().zip(labels) {
        let Some(label) = *label else {
            report.excluded += 1;
            continue;
        };
        match (p.is_positive(), label) {
            (true, true) => report.true_positive += 1,
            (false, false) => report.true_negative += 1,
            (true, false) => report.false_positive += 1,
            (false, true) => report.false_negative += 1,
        }
        scores.push(p.score);
        truth.push(label);
    }
    report.accuracy = (report.true_positive + report.true_negative) as f64 / truth.len().max(1) as f64;
    report.auc = auc_roc(&scores, &truth)?;
    Ok(report)
}
