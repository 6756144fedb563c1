//! Accuracy, per-class precision/recall/F1 and their macro and weighted
//! averages.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classifier::Prediction;
use crate::snippet::Origin;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricsError {
    #[error("truth has {truth} labels but there are {predicted} predictions")]
    LengthMismatch { truth: usize, predicted: usize },
    #[error("nothing to evaluate")]
    Empty,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub positive_class: Origin,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
}

impl ConfusionCounts {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }

    /// The same table seen from the other class.
    pub fn flipped(&self) -> ConfusionCounts {
        ConfusionCounts { positive_class: self.positive_class.other(), tp: self.tn, fp: self.fn_, fn_: self.fp, tn: self.tp }
    }
}

pub fn confusion(truth: &[Origin], predicted: &[Origin], positive_class: Origin) -> Result<ConfusionCounts, MetricsError> {
    if truth.len() != predicted.len() {
        return Err(MetricsError::LengthMismatch { truth: truth.len(), predicted: predicted.len() });
    }
    if truth.is_empty() {
        return Err(MetricsError::Empty);
    }
    let mut c = ConfusionCounts { positive_class, tp: 0, fp: 0, fn_: 0, tn: 0 };
    for (&t, &p) in truth.iter().zip(predicted) {
        match (t == positive_class, p == positive_class) {
            (true, true) => c.tp += 1,
            (false, true) => c.fp += 1,
            (true, false) => c.fn_ += 1,
            (false, false) => c.tn += 1,
        }
    }
    Ok(c)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
    /// Items of this class predicted as this class.
    pub correct: usize,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Metrics of `counts.positive_class`; vanishing denominators give 0.
pub fn per_class_metrics(counts: &ConfusionCounts) -> ClassMetrics {
    let precision = ratio(counts.tp, counts.tp + counts.fp);
    let recall = ratio(counts.tp, counts.tp + counts.fn_);
    let f1 = if precision + recall == 0.0 { 0.0 } else { 2.0 * precision * recall / (precision + recall) };
    ClassMetrics { precision, recall, f1, support: counts.tp + counts.fn_, correct: counts.tp }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Averages {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aggregates {
    pub accuracy: f64,
    pub macro_avg: Averages,
    pub weighted_avg: Averages,
    pub total_support: usize,
}

/// Accuracy, unweighted mean and support-weighted mean over the classes.
///
/// Weighted recall is computed from the correct counts, which makes it
/// identical to accuracy rather than equal up to rounding.
pub fn aggregate(per_class: &[ClassMetrics]) -> Aggregates {
    let n: usize = per_class.iter().map(|m| m.support).sum();
    let k = per_class.len().max(1) as f64;
    let mean = |f: fn(&ClassMetrics) -> f64| per_class.iter().map(f).sum::<f64>() / k;
    let weighted = |f: fn(&ClassMetrics) -> f64| {
        if n == 0 {
            0.0
        } else {
            per_class.iter().map(|m| m.support as f64 * f(m)).sum::<f64>() / n as f64
        }
    };
    let accuracy = ratio(per_class.iter().map(|m| m.correct).sum(), n);
    Aggregates {
        accuracy,
        macro_avg: Averages { precision: mean(|m| m.precision), recall: mean(|m| m.recall), f1: mean(|m| m.f1) },
        weighted_avg: Averages { precision: weighted(|m| m.precision), recall: accuracy, f1: weighted(|m| m.f1) },
        total_support: n,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerClass {
    pub human: ClassMetrics,
    pub chatgpt: ClassMetrics,
}

impl PerClass {
    pub fn get(&self, origin: Origin) -> &ClassMetrics {
        match origin {
            Origin::Human => &self.human,
            Origin::Chatgpt => &self.chatgpt,
        }
    }
}

/// Metrics of one experiment cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub dataset: String,
    pub config: String,
    #[serde(default)]
    pub backend: String,
    #[serde(default)]
    pub seed: u64,
    pub per_class: PerClass,
    pub accuracy: f64,
    pub macro_avg: Averages,
    pub weighted_avg: Averages,
    pub total_support: usize,
    /// Counts with the generated class as positive.
    pub confusion: ConfusionCounts,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ReportTags {
    pub dataset: String,
    pub config: String,
    pub backend: String,
    pub seed: u64,
}

pub fn evaluate(truth: &[Origin], predicted: &[Origin], tags: ReportTags) -> Result<EvalReport, MetricsError> {
    let chatgpt = confusion(truth, predicted, Origin::Chatgpt)?;
    let per_class = PerClass { human: per_class_metrics(&chatgpt.flipped()), chatgpt: per_class_metrics(&chatgpt) };
    let agg = aggregate(&[per_class.human, per_class.chatgpt]);
    Ok(EvalReport {
        dataset: tags.dataset,
        config: tags.config,
        backend: tags.backend,
        seed: tags.seed,
        per_class,
        accuracy: agg.accuracy,
        macro_avg: agg.macro_avg,
        weighted_avg: agg.weighted_avg,
        total_support: agg.total_support,
        confusion: chatgpt,
    })
}

/// Scores predictions against the snippets' true labels, matched by position.
pub fn evaluate_predictions(truth: &[Origin], predictions: &[Prediction], tags: ReportTags) -> Result<EvalReport, MetricsError> {
    let predicted: Vec<Origin> = predictions.iter().map(|p| p.label).collect();
    evaluate(truth, &predicted, tags)
}

/// Two-decimal rendering used in tables (ties round to even, as printf does).
pub fn round2(x: f64) -> String {
    format!("{x:.2}")
}
