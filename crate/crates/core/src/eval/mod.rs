//! Evaluation: topic coherence, document sentiment classification and
//! attribute-profile similarity.
//!
//! Logarithms are base 2 in the divergences and natural in NPMI (the ratio
//! is base-free). Probabilities are smoothed by [`SMOOTHING`].

mod classify;
mod coherence;
mod divergence;

pub use classify::{
    auc_roc, classify_documents, evaluate_classification, ground_truth_labels, ClassificationReport, GroundTruth,
    Prediction, POSITIVE_RATING_THRESHOLD,
};
pub use coherence::{
    coherence_report, npmi_coherence, npmi_pair, w2v_coherence, CoherenceReport, CooccurrenceIndex,
    TopicCoherence, NPMI_SCALE,
};
pub use divergence::{
    baseline_matrix, baseline_similarity, js_distance, kl_divergence, profile_distance_matrix, profile_vector,
    review_embeddings, SimilarityMatrix,
};

pub const SMOOTHING: f64 = 1e-12;
