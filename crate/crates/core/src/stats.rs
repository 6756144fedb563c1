//! Paired comparison of two classifiers on the same test items: exact
//! McNemar test, Holm step-down correction and an odds-ratio effect size.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::snippet::Origin;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StatsError {
    #[error("p-value {0} is outside [0, 1]")]
    PValueOutOfRange(f64),
    #[error("odds ratio undefined: no discordant pairs")]
    UndefinedEffect,
    #[error("nothing to compare")]
    Empty,
    #[error("comparison file {path}: {message}")]
    Input { path: String, message: String },
}

/// 2x2 table of paired outcomes of classifiers A and B.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairedOutcome {
    pub both_correct: usize,
    /// A right, B wrong (`b`).
    pub a_only_correct: usize,
    /// B right, A wrong (`c`).
    pub b_only_correct: usize,
    pub both_wrong: usize,
}

impl PairedOutcome {
    pub fn total(&self) -> usize {
        self.both_correct + self.a_only_correct + self.b_only_correct + self.both_wrong
    }

    pub fn from_predictions(rows: &[ComparisonRow]) -> Self {
        let mut t = PairedOutcome::default();
        for r in rows {
            match (r.pred_a == r.truth, r.pred_b == r.truth) {
                (true, true) => t.both_correct += 1,
                (true, false) => t.a_only_correct += 1,
                (false, true) => t.b_only_correct += 1,
                (false, false) => t.both_wrong += 1,
            }
        }
        t
    }
}

/// `ln(n choose k)` terms are built by recurrence, so large discordant counts
/// neither overflow nor underflow.
fn ln_binomial_pmf_half(n: usize, upto: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(upto + 1);
    let mut ln_choose = 0.0f64;
    let ln_half_n = -(n as f64) * std::f64::consts::LN_2;
    for k in 0..=upto {
        if k > 0 {
            ln_choose += ((n - k + 1) as f64).ln() - (k as f64).ln();
        }
        out.push(ln_choose + ln_half_n);
    }
    out
}

/// Two-sided exact McNemar test on the discordant counts:
/// `min(1, 2 P(X <= min(b, c)))` with `X ~ Binomial(b + c, 1/2)`.
pub fn mcnemar_exact(b: usize, c: usize) -> f64 {
    let n = b + c;
    if n == 0 {
        return 1.0;
    }
    let terms = ln_binomial_pmf_half(n, b.min(c));
    let peak = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let tail = peak.exp() * terms.iter().map(|t| (t - peak).exp()).sum::<f64>();
    (2.0 * tail).min(1.0)
}

/// Holm step-down adjustment; results are returned in input order.
pub fn holm_adjust(p_values: &[f64]) -> Result<Vec<f64>, StatsError> {
    if let Some(&bad) = p_values.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(StatsError::PValueOutOfRange(bad));
    }
    let m = p_values.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| p_values[a].total_cmp(&p_values[b]).then(a.cmp(&b)));
    let mut adjusted = vec![0.0; m];
    let mut running = 0.0f64;
    for (rank, &i) in order.iter().enumerate() {
        running = running.max(((m - rank) as f64 * p_values[i]).min(1.0));
        adjusted[i] = running;
    }
    Ok(adjusted)
}

/// `b / c`, with 0.5 added to both counts when either is zero.
pub fn odds_ratio(b: usize, c: usize) -> Result<f64, StatsError> {
    match (b, c) {
        (0, 0) => Err(StatsError::UndefinedEffect),
        (_, 0) | (0, _) => Ok((b as f64 + 0.5) / (c as f64 + 0.5)),
        _ => Ok(b as f64 / c as f64),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatResult {
    pub label: String,
    pub outcome: PairedOutcome,
    pub p_raw: f64,
    pub p_adjusted: f64,
    /// Absent when the effect is undefined; see `effect_error`.
    pub odds_ratio: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub effect_error: Option<String>,
    pub test: String,
    pub correction: String,
    pub effect: String,
}

/// Exact McNemar per comparison, Holm-adjusted across the batch.
pub fn compare_classifiers(outcomes: &[(String, PairedOutcome)]) -> Result<Vec<StatResult>, StatsError> {
    if outcomes.is_empty() {
        return Err(StatsError::Empty);
    }
    let raw: Vec<f64> = outcomes.iter().map(|(_, o)| mcnemar_exact(o.a_only_correct, o.b_only_correct)).collect();
    let adjusted = holm_adjust(&raw)?;
    Ok(outcomes
        .iter()
        .zip(raw.into_iter().zip(adjusted))
        .map(|((label, o), (p_raw, p_adjusted))| {
            let or = odds_ratio(o.a_only_correct, o.b_only_correct);
            StatResult {
                label: label.clone(),
                outcome: *o,
                p_raw,
                p_adjusted,
                effect_error: or.as_ref().err().map(ToString::to_string),
                odds_ratio: or.ok(),
                test: "mcnemar-exact-binomial".into(),
                correction: "holm".into(),
                effect: "odds-ratio-b/c (+0.5 on zero cells)".into(),
            }
        })
        .collect())
}

/// One row of a comparison file: `snippet_id,truth,pred_a,pred_b`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub snippet_id: String,
    pub truth: Origin,
    pub pred_a: Origin,
    pub pred_b: Origin,
}

pub fn read_comparison_csv(path: &Path) -> Result<Vec<ComparisonRow>, StatsError> {
    let input = |message: String| StatsError::Input { path: path.display().to_string(), message };
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path).map_err(|e| input(e.to_string()))?;
    reader.deserialize().map(|row| row.map_err(|e| input(e.to_string()))).collect()
}
