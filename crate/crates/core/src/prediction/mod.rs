//! Ranking by a single measure and supervised linear classification.

mod rank;
mod svm;

pub use rank::{
    curve, f1_score, metrics_at_k, random_baseline, rank_by_scores, rank_pairs, Instance, Measure, MeasureKind,
    MetricsAtK, RankedEntry, RankedList,
};
pub use svm::{
    evaluate_classifier, evaluate_predictions, train, Dataset, LabeledFeatures, LearningRate, LinearModel, Prf,
    TrainConfig, TrainOutcome,
};
