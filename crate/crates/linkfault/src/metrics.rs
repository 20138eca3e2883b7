//! Evaluation: confusion matrices, precision/recall/F1, R-squared, fault
//! detection accuracy, and timing summaries.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("predicted and actual lengths differ: {predicted} vs {actual}")]
    LengthMismatch { predicted: usize, actual: usize },
    #[error("at least 2 samples required, got {0}")]
    TooFewSamples(usize),
    #[error("actual values are constant; R-squared is undefined")]
    ConstantTarget,
    #[error("no faulty points in the evaluation set")]
    NoFaultyPoints,
}

/// Square count matrix: rows index the true class, columns the predicted.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    class_count: usize,
    counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn new(class_count: usize) -> Self {
        ConfusionMatrix { class_count, counts: vec![0; class_count * class_count] }
    }

    /// Tallies `(true, predicted)` pairs; panics on out-of-range labels.
    pub fn from_pairs(
        class_count: usize,
        pairs: impl IntoIterator<Item = (usize, usize)>,
    ) -> Self {
        let mut cm = ConfusionMatrix::new(class_count);
        for (t, p) in pairs {
            cm.record(t, p);
        }
        cm
    }

    pub fn record(&mut self, true_class: usize, predicted: usize) {
        assert!(true_class < self.class_count && predicted < self.class_count);
        self.counts[true_class * self.class_count + predicted] += 1;
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn count(&self, true_class: usize, predicted: usize) -> u64 {
        self.counts[true_class * self.class_count + predicted]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Merges another matrix of the same shape into this one.
    pub fn merge(&mut self, other: &ConfusionMatrix) {
        assert_eq!(self.class_count, other.class_count);
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
    }

    pub fn true_positives(&self, class: usize) -> u64 {
        self.count(class, class)
    }

    pub fn false_positives(&self, class: usize) -> u64 {
        (0..self.class_count).filter(|&t| t != class).map(|t| self.count(t, class)).sum()
    }

    pub fn false_negatives(&self, class: usize) -> u64 {
        (0..self.class_count).filter(|&p| p != class).map(|p| self.count(class, p)).sum()
    }

    pub fn accuracy(&self) -> f64 {
        let total = self.total();
        if total == 0 {
            return 0.0;
        }
        let hits: u64 = (0..self.class_count).map(|c| self.count(c, c)).sum();
        hits as f64 / total as f64
    }
}

/// Precision, recall, and F1 of one class. A score whose denominator is
/// zero is reported as 0 with the matching `*_defined` flag cleared, so
/// macro averages stay total.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassScores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub precision_defined: bool,
    pub recall_defined: bool,
}

/// Per-class scores plus unweighted macro averages.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub per_class: Vec<ClassScores>,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    pub accuracy: f64,
}

/// Harmonic mean of precision and recall; 0 when both are 0.
pub fn f1_from(precision: f64, recall: f64) -> f64 {
    if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    }
}

/// Per-class and macro-averaged precision, recall, and F1.
///
/// `precision(c) = TP / (TP + FP)`, `recall(c) = TP / (TP + FN)`,
/// `F1 = 2PR / (P + R)`; macro scores average the per-class values without
/// class weighting.
pub fn precision_recall_f1(cm: &ConfusionMatrix) -> Scores {
    let k = cm.class_count();
    let per_class: Vec<ClassScores> = (0..k)
        .map(|c| {
            let tp = cm.true_positives(c) as f64;
            let fp = cm.false_positives(c) as f64;
            let fn_ = cm.false_negatives(c) as f64;
            let precision_defined = tp + fp > 0.0;
            let recall_defined = tp + fn_ > 0.0;
            let precision = if precision_defined { tp / (tp + fp) } else { 0.0 };
            let recall = if recall_defined { tp / (tp + fn_) } else { 0.0 };
            ClassScores {
                precision,
                recall,
                f1: f1_from(precision, recall),
                precision_defined,
                recall_defined,
            }
        })
        .collect();
    let kf = k.max(1) as f64;
    Scores {
        macro_precision: per_class.iter().map(|s| s.precision).sum::<f64>() / kf,
        macro_recall: per_class.iter().map(|s| s.recall).sum::<f64>() / kf,
        macro_f1: per_class.iter().map(|s| s.f1).sum::<f64>() / kf,
        accuracy: cm.accuracy(),
        per_class,
    }
}

/// Micro-averaged precision, recall, and F1: scores of the pooled counts.
/// For single-label classification all three equal the accuracy.
pub fn micro_precision_recall_f1(cm: &ConfusionMatrix) -> (f64, f64, f64) {
    let k = cm.class_count();
    let tp: u64 = (0..k).map(|c| cm.true_positives(c)).sum();
    let fp: u64 = (0..k).map(|c| cm.false_positives(c)).sum();
    let fn_: u64 = (0..k).map(|c| cm.false_negatives(c)).sum();
    let precision = if tp + fp > 0 { tp as f64 / (tp + fp) as f64 } else { 0.0 };
    let recall = if tp + fn_ > 0 { tp as f64 / (tp + fn_) as f64 } else { 0.0 };
    (precision, recall, f1_from(precision, recall))
}

/// Coefficient of determination: `1 - SS_res / SS_tot`.
///
/// Multi-output predictions are pooled: pass flattened slices and the score
/// weights every output value equally.
pub fn r2_score(predicted: &[f64], actual: &[f64]) -> Result<f64, MetricsError> {
    if predicted.len() != actual.len() {
        return Err(MetricsError::LengthMismatch {
            predicted: predicted.len(),
            actual: actual.len(),
        });
    }
    if actual.len() < 2 {
        return Err(MetricsError::TooFewSamples(actual.len()));
    }
    let mean = actual.iter().sum::<f64>() / actual.len() as f64;
    let ss_tot: f64 = actual.iter().map(|&a| (a - mean) * (a - mean)).sum();
    if ss_tot == 0.0 {
        return Err(MetricsError::ConstantTarget);
    }
    let ss_res: f64 = predicted.iter().zip(actual).map(|(&p, &a)| (p - a) * (p - a)).sum();
    Ok(1.0 - ss_res / ss_tot)
}

/// Fraction of truly faulty points reported as some fault, any class.
///
/// `detected[i]` says whether the diagnosis flagged point `i`;
/// `faulty[i]` is the ground truth. Points that are not faulty are ignored.
pub fn fault_detection_accuracy(detected: &[bool], faulty: &[bool]) -> Result<f64, MetricsError> {
    if detected.len() != faulty.len() {
        return Err(MetricsError::LengthMismatch {
            predicted: detected.len(),
            actual: faulty.len(),
        });
    }
    let total = faulty.iter().filter(|&&f| f).count();
    if total == 0 {
        return Err(MetricsError::NoFaultyPoints);
    }
    let hit = detected.iter().zip(faulty).filter(|&(&d, &f)| f && d).count();
    Ok(hit as f64 / total as f64)
}

/// Mean and percentile summary of per-point wall times, microseconds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimingSummary {
    pub mean_us: f64,
    pub p50_us: f64,
    pub p90_us: f64,
    pub p99_us: f64,
    pub max_us: f64,
}

/// Summarizes a non-empty set of per-point timings. Percentiles use the
/// nearest-rank method on the sorted samples.
pub fn summarize_timings(times_us: &[f64]) -> TimingSummary {
    assert!(!times_us.is_empty(), "timing summary needs at least one sample");
    let mut sorted = times_us.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("timings are finite"));
    let rank = |q: f64| -> f64 {
        let idx = ((q * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
        sorted[idx - 1]
    };
    TimingSummary {
        mean_us: sorted.iter().sum::<f64>() / sorted.len() as f64,
        p50_us: rank(0.50),
        p90_us: rank(0.90),
        p99_us: rank(0.99),
        max_us: *sorted.last().expect("non-empty"),
    }
}

/// One evaluation run's scores, serialized to JSON for reports.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    /// What was evaluated, e.g. a model file stem or pipeline mode.
    pub subject: String,
    pub class_count: usize,
    pub rows: usize,
    pub scores: Scores,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub micro: Option<(f64, f64, f64)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fault_detection_accuracy: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timing: Option<TimingSummary>,
}
