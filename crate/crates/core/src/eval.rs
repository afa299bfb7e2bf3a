//! Classification metrics and reporting.
//!
//! Scores are "probability of ischemic"; a window or record is
//! predicted positive when its score is at or above the threshold.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("metric needs both classes present")]
    SingleClassInput,
    #[error("record group contains no scores")]
    EmptyGroup,
    #[error("scores and labels differ in length")]
    LengthMismatch,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub true_positives: usize,
    pub false_positives: usize,
    pub true_negatives: usize,
    pub false_negatives: usize,
}

/// Full evaluation summary for one scored split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub auc: f64,
    pub sensitivity: f64,
    pub specificity: f64,
    /// Operating threshold behind the confusion matrix.
    pub threshold: f64,
    /// Threshold maximizing TPR - FPR, reported alongside.
    pub youden_threshold: f64,
    pub confusion: Confusion,
    /// (FPR, TPR) pairs from (0,0) to (1,1).
    pub roc_points: Vec<(f64, f64)>,
}

fn check(scores: &[f64], labels: &[bool]) -> Result<(usize, usize), EvalError> {
    if scores.len() != labels.len() {
        return Err(EvalError::LengthMismatch);
    }
    let positives = labels.iter().filter(|&&l| l).count();
    let negatives = labels.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(EvalError::SingleClassInput);
    }
    Ok((positives, negatives))
}

/// ROC-AUC as the Mann-Whitney statistic: the probability that a
/// random positive outscores a random negative, ties counting one
/// half. Computed from midranks, which is algebraically identical to
/// the brute-force count over all positive-negative pairs.
pub fn roc_auc(scores: &[f64], labels: &[bool]) -> Result<f64, EvalError> {
    let (positives, negatives) = check(scores, labels)?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    // Midranks: tied values share the average of their 1-based ranks.
    let mut rank_sum_pos = 0.0f64;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            j += 1;
        }
        let midrank = (i + 1 + j) as f64 / 2.0; // average of i+1 ..= j
        for &idx in &order[i..j] {
            if labels[idx] {
                rank_sum_pos += midrank;
            }
        }
        i = j;
    }
    let p = positives as f64;
    let numerator = rank_sum_pos - p * (p + 1.0) / 2.0;
    Ok(numerator / (p * negatives as f64))
}

/// ROC curve as (FPR, TPR) points, one per distinct score, sweeping
/// the threshold from above the maximum down to the minimum.
pub fn roc_points(scores: &[f64], labels: &[bool]) -> Result<Vec<(f64, f64)>, EvalError> {
    let (positives, negatives) = check(scores, labels)?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let mut points = vec![(0.0, 0.0)];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            if labels[order[j]] {
                tp += 1;
            } else {
                fp += 1;
            }
            j += 1;
        }
        points.push((fp as f64 / negatives as f64, tp as f64 / positives as f64));
        i = j;
    }
    Ok(points)
}

/// Trapezoidal area under a (FPR, TPR) point list.
pub fn trapezoid_area(points: &[(f64, f64)]) -> f64 {
    points
        .windows(2)
        .map(|p| (p[1].0 - p[0].0) * (p[1].1 + p[0].1) / 2.0)
        .sum()
}

/// Sensitivity, specificity, and the confusion matrix at a threshold
/// (score >= threshold predicts positive).
pub fn sensitivity_specificity(
    scores: &[f64],
    labels: &[bool],
    threshold: f64,
) -> Result<(f64, f64, Confusion), EvalError> {
    check(scores, labels)?;
    let mut c = Confusion {
        true_positives: 0,
        false_positives: 0,
        true_negatives: 0,
        false_negatives: 0,
    };
    for (&s, &l) in scores.iter().zip(labels) {
        match (s >= threshold, l) {
            (true, true) => c.true_positives += 1,
            (true, false) => c.false_positives += 1,
            (false, false) => c.true_negatives += 1,
            (false, true) => c.false_negatives += 1,
        }
    }
    let sensitivity = c.true_positives as f64 / (c.true_positives + c.false_negatives) as f64;
    let specificity = c.true_negatives as f64 / (c.true_negatives + c.false_positives) as f64;
    Ok((sensitivity, specificity, c))
}

/// Threshold maximizing Youden's J = TPR - FPR.
///
/// Any threshold inside the gap between two adjacent distinct scores
/// classifies identically; the midpoint of the optimal gap is
/// returned. Ties on J resolve to the lowest such threshold.
pub fn youden_threshold(scores: &[f64], labels: &[bool]) -> Result<f64, EvalError> {
    let (positives, negatives) = check(scores, labels)?;
    let mut unique: Vec<f64> = scores.to_vec();
    unique.sort_by(f64::total_cmp);
    unique.dedup();

    let mut best: Option<(f64, usize)> = None; // (J, index into unique)
    for (k, &u) in unique.iter().enumerate() {
        let (mut tp, mut fp) = (0usize, 0usize);
        for (&s, &l) in scores.iter().zip(labels) {
            if s >= u {
                if l {
                    tp += 1;
                } else {
                    fp += 1;
                }
            }
        }
        let j = tp as f64 / positives as f64 - fp as f64 / negatives as f64;
        // Strict > keeps the earliest (lowest-threshold) maximum.
        if best.is_none_or(|(best_j, _)| j > best_j + 1e-12) {
            best = Some((j, k));
        }
    }
    let (_, k) = best.expect("unique scores nonempty");
    Ok(if k == 0 {
        unique[0]
    } else {
        (unique[k - 1] + unique[k]) / 2.0
    })
}

/// Per-record score: mean of the record's window scores, summed in
/// value order so the result is independent of window order.
pub fn aggregate(
    scores_by_record: &BTreeMap<String, Vec<f64>>,
) -> Result<BTreeMap<String, f64>, EvalError> {
    let mut out = BTreeMap::new();
    for (record, scores) in scores_by_record {
        if scores.is_empty() {
            return Err(EvalError::EmptyGroup);
        }
        let mut sorted = scores.clone();
        sorted.sort_by(f64::total_cmp);
        let mean = sorted.iter().sum::<f64>() / sorted.len() as f64;
        out.insert(record.clone(), mean);
    }
    Ok(out)
}

impl EvalReport {
    /// Report at the default 0.5 operating threshold.
    pub fn from_scores(scores: &[f64], labels: &[bool]) -> Result<Self, EvalError> {
        Self::at_threshold(scores, labels, 0.5)
    }

    pub fn at_threshold(scores: &[f64], labels: &[bool], threshold: f64) -> Result<Self, EvalError> {
        let auc = roc_auc(scores, labels)?;
        let (sensitivity, specificity, confusion) =
            sensitivity_specificity(scores, labels, threshold)?;
        Ok(Self {
            auc,
            sensitivity,
            specificity,
            threshold,
            youden_threshold: youden_threshold(scores, labels)?,
            confusion,
            roc_points: roc_points(scores, labels)?,
        })
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// ROC curve as `fpr,tpr` CSV for external plotting.
    pub fn roc_csv(&self) -> String {
        let mut out = String::from("fpr,tpr\n");
        for (fpr, tpr) in &self.roc_points {
            out.push_str(&format!("{fpr},{tpr}\n"));
        }
        out
    }
}
