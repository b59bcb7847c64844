//! Decision rules for fused columns and binary classification metrics.

use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{CfaError, Result};
use crate::fusion::{FusedColumn, FusionKind, RcWeighting};
use crate::model::{FusionSpec, DEFAULT_THRESHOLD};
use crate::ranking::TiePolicy;

/// Predict 1 iff the fused score reaches `threshold`.
pub fn classify_by_threshold(fused: &FusedColumn, threshold: f64) -> Result<Vec<u8>> {
    if fused.kind != FusionKind::ScoreCombination {
        return Err(CfaError::KindMismatch { expected: "score combination", got: fused.kind.as_str() });
    }
    Ok(threshold_predictions(&fused.values, threshold))
}

pub(crate) fn threshold_predictions(values: &[f64], threshold: f64) -> Vec<u8> {
    values.iter().map(|&v| u8::from(v >= threshold)).collect()
}

/// Number of positives admitted by the top-k cut: `round(n * prior)`,
/// halves rounded away from zero.
pub fn top_k_count(n: usize, positive_prior: f64) -> usize {
    ((n as f64) * positive_prior).round() as usize
}

/// Batch rule for rank combinations: the `round(n * prior)` items with the
/// lowest fused rank are positive. Ties at the cut admit earlier items.
pub fn classify_top_k(fused: &FusedColumn, positive_prior: f64) -> Result<Vec<u8>> {
    if fused.kind != FusionKind::RankCombination {
        return Err(CfaError::KindMismatch { expected: "rank combination", got: fused.kind.as_str() });
    }
    if !(positive_prior > 0.0 && positive_prior < 1.0) {
        return Err(CfaError::config(format!("positive prior {positive_prior} outside (0,1)")));
    }
    let n = fused.values.len();
    let k = top_k_count(n, positive_prior);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| fused.values[a].total_cmp(&fused.values[b]));
    let mut preds = vec![0u8; n];
    for &i in &order[..k] {
        preds[i] = 1;
    }
    Ok(preds)
}

/// Picks the SC threshold that maximizes accuracy on labeled (training)
/// fused scores. Candidates are 0.5 and the midpoints between consecutive
/// distinct values; ties go to the candidate closest to 0.5.
pub fn optimize_threshold(values: &[f64], labels: &[u8]) -> Result<f64> {
    if values.len() != labels.len() {
        return Err(CfaError::LengthMismatch { expected: values.len(), got: labels.len() });
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup();
    let mut candidates = vec![DEFAULT_THRESHOLD];
    candidates.extend(sorted.windows(2).map(|w| w[0] + (w[1] - w[0]) / 2.0));

    let correct = |th: f64| values.iter().zip(labels).filter(|(&v, &l)| u8::from(v >= th) == l).count();
    let mut best = DEFAULT_THRESHOLD;
    let mut best_correct = correct(best);
    for &c in &candidates[1..] {
        let k = correct(c);
        let closer = (c - DEFAULT_THRESHOLD).abs() < (best - DEFAULT_THRESHOLD).abs();
        if k > best_correct || (k == best_correct && closer) {
            best = c;
            best_correct = k;
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl Confusion {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }
}

/// Confusion counts plus the four reported metrics.
///
/// Ratios with a zero denominator are reported as 0 and set `degenerate`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Metrics {
    #[serde(flatten)]
    pub confusion: Confusion,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub degenerate: bool,
}

impl Metrics {
    pub fn from_confusion(c: Confusion) -> Metrics {
        let mut degenerate = false;
        let mut ratio = |num: usize, den: usize| {
            if den == 0 {
                degenerate = true;
                0.0
            } else {
                num as f64 / den as f64
            }
        };
        let accuracy = ratio(c.tp + c.tn, c.total());
        let precision = ratio(c.tp, c.tp + c.fp);
        let recall = ratio(c.tp, c.tp + c.fn_);
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            degenerate = true;
            0.0
        };
        Metrics { confusion: c, accuracy, precision, recall, f1, degenerate }
    }
}

pub fn confusion(predictions: &[u8], labels: &[u8]) -> Result<Confusion> {
    if predictions.len() != labels.len() {
        return Err(CfaError::LengthMismatch { expected: labels.len(), got: predictions.len() });
    }
    let mut c = Confusion::default();
    for (&p, &l) in predictions.iter().zip(labels) {
        match (p, l) {
            (1, 1) => c.tp += 1,
            (1, 0) => c.fp += 1,
            (0, 0) => c.tn += 1,
            (0, 1) => c.fn_ += 1,
            _ => return Err(CfaError::config(format!("non-binary prediction {p} or label {l}"))),
        }
    }
    Ok(c)
}

pub fn compute_metrics(predictions: &[u8], labels: &[u8]) -> Result<Metrics> {
    Ok(Metrics::from_confusion(confusion(predictions, labels)?))
}

/// Harmonic mean of precision and recall.
pub fn f1_from_pr(precision: f64, recall: f64) -> Result<f64> {
    if precision + recall == 0.0 {
        return Err(CfaError::config("precision and recall are both zero"));
    }
    Ok(2.0 * precision * recall / (precision + recall))
}

/// Everything known about one evaluated fusion cell.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub spec: FusionSpec,
    pub rc_weighting: RcWeighting,
    pub tie_policy: TiePolicy,
    /// Set when requested diversity weights degenerated to equal weights.
    pub weight_fallback: bool,
    pub metrics: Metrics,
}

#[derive(Serialize)]
struct FlatReport<'a> {
    systems: String,
    method: &'a str,
    weight_split: &'a str,
    transductive: bool,
    threshold: f64,
    positive_prior: f64,
    rc_weighting: RcWeighting,
    tie_policy: TiePolicy,
    weight_fallback: bool,
    #[serde(flatten)]
    metrics: &'a Metrics,
}

impl EvalReport {
    /// Flat key-value view for JSON emission.
    pub fn flat(&self) -> impl Serialize + '_ {
        FlatReport {
            systems: self.spec.subset.join("+"),
            method: self.spec.method.as_str(),
            weight_split: if self.spec.method.uses_weight_split() { self.spec.weight_split.as_str() } else { "none" },
            transductive: self.spec.is_transductive(),
            threshold: self.spec.threshold,
            positive_prior: self.spec.positive_prior,
            rc_weighting: self.rc_weighting,
            tie_policy: self.tie_policy,
            weight_fallback: self.weight_fallback,
            metrics: &self.metrics,
        }
    }
}

/// Per-item predictions CSV: `item_id,label,fused_value,prediction`.
/// Fused values use the shortest exact representation.
pub fn predictions_csv(item_ids: &[String], labels: Option<&[u8]>, fused: &[f64], predictions: &[u8]) -> String {
    let mut out = String::from("item_id,label,fused_value,prediction\n");
    for (i, id) in item_ids.iter().enumerate() {
        out.push_str(id);
        out.push(',');
        if let Some(l) = labels {
            let _ = write!(out, "{}", l[i]);
        }
        let _ = writeln!(out, ",{},{}", fused[i], predictions[i]);
    }
    out
}
