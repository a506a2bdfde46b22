//! Evaluation suite: confusion-derived rates, ROC/AUC, the log₁₀(recall/FPR)
//! ranking metric, and aggregation across models and datasets.
//!
//! Positive class = intrusion = 1 throughout. All internal arithmetic is
//! `f64` regardless of the caller's score type, so the trapezoid-vs-rank AUC
//! identity holds to tight tolerance.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::preprocess::{ClassLabel, Provenance};
use crate::Float;

#[derive(Debug, thiserror::Error)]
pub enum MetricsError {
    #[error("length mismatch: {left} labels vs {right} values")]
    LengthMismatch { left: usize, right: usize },
    #[error("need both classes present, got only {0}")]
    SingleClass(ClassLabel),
    #[error("empty input")]
    Empty,
}

/// Binary confusion counts (positive class = intrusion).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct ConfusionMatrix {
    pub true_positives: usize,
    pub false_negatives: usize,
    pub false_positives: usize,
    pub true_negatives: usize,
}

impl ConfusionMatrix {
    pub fn new(tp: usize, fn_: usize, fp: usize, tn: usize) -> Self {
        Self {
            true_positives: tp,
            false_negatives: fn_,
            false_positives: fp,
            true_negatives: tn,
        }
    }

    pub fn total(&self) -> usize {
        self.true_positives + self.false_negatives + self.false_positives + self.true_negatives
    }

    /// Count of actually-negative (normal) items.
    pub fn negatives(&self) -> usize {
        self.false_positives + self.true_negatives
    }
}

/// Counts agreements/disagreements between truth and predictions.
pub fn confusion(
    y_true: &[ClassLabel],
    y_pred: &[ClassLabel],
) -> Result<ConfusionMatrix, MetricsError> {
    if y_true.len() != y_pred.len() {
        return Err(MetricsError::LengthMismatch {
            left: y_true.len(),
            right: y_pred.len(),
        });
    }
    let mut cm = ConfusionMatrix::default();
    for (&t, &p) in y_true.iter().zip(y_pred) {
        match (t, p) {
            (ClassLabel::Intrusion, ClassLabel::Intrusion) => cm.true_positives += 1,
            (ClassLabel::Intrusion, ClassLabel::Normal) => cm.false_negatives += 1,
            (ClassLabel::Normal, ClassLabel::Intrusion) => cm.false_positives += 1,
            (ClassLabel::Normal, ClassLabel::Normal) => cm.true_negatives += 1,
        }
    }
    Ok(cm)
}

/// Rates derived from a confusion matrix. Any 0/0 ratio is defined as 0 and
/// flags `zero_division` so aggregates stay total without hiding the case.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Rates {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub fpr: f64,
    pub macro_f1: f64,
    pub zero_division: bool,
}

fn ratio(num: usize, den: usize, warn: &mut bool) -> f64 {
    if den == 0 {
        if num == 0 {
            *warn = true;
        }
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn f1(precision: f64, recall: f64, warn: &mut bool) -> f64 {
    if precision + recall == 0.0 {
        *warn = true;
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

/// accuracy, precision, recall (TPR), FPR, and macro-F1 (mean of per-class F1).
pub fn classification_metrics(cm: &ConfusionMatrix) -> Result<Rates, MetricsError> {
    let total = cm.total();
    if total == 0 {
        return Err(MetricsError::Empty);
    }
    let mut warn = false;
    let tp = cm.true_positives;
    let fn_ = cm.false_negatives;
    let fp = cm.false_positives;
    let tn = cm.true_negatives;

    let accuracy = (tp + tn) as f64 / total as f64;
    let precision = ratio(tp, tp + fp, &mut warn);
    let recall = ratio(tp, tp + fn_, &mut warn);
    let fpr = ratio(fp, fp + tn, &mut warn);

    let f1_pos = f1(precision, recall, &mut warn);
    let precision_neg = ratio(tn, tn + fn_, &mut warn);
    let recall_neg = ratio(tn, tn + fp, &mut warn);
    let f1_neg = f1(precision_neg, recall_neg, &mut warn);

    Ok(Rates {
        accuracy,
        precision,
        recall,
        fpr,
        macro_f1: (f1_pos + f1_neg) / 2.0,
        zero_division: warn,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RocPoint {
    pub fpr: f64,
    pub tpr: f64,
}

/// ROC curve from a descending sweep over distinct score values. Tied scores
/// collapse into a single step, so the curve is tie-safe.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RocCurve {
    pub points: Vec<RocPoint>,
    /// Score cut producing each point; `thresholds[0]` is +∞ for (0,0).
    pub thresholds: Vec<f64>,
}

/// Sweeps thresholds over the distinct scores, highest first. The curve
/// starts at (0,0) (threshold +∞) and ends at (1,1).
pub fn roc_curve<F: Float>(y_true: &[ClassLabel], scores: &[F]) -> Result<RocCurve, MetricsError> {
    if y_true.len() != scores.len() {
        return Err(MetricsError::LengthMismatch {
            left: y_true.len(),
            right: scores.len(),
        });
    }
    let n_pos = y_true
        .iter()
        .filter(|&&l| l == ClassLabel::Intrusion)
        .count();
    let n_neg = y_true.len() - n_pos;
    if n_pos == 0 {
        return Err(MetricsError::SingleClass(ClassLabel::Normal));
    }
    if n_neg == 0 {
        return Err(MetricsError::SingleClass(ClassLabel::Intrusion));
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| {
        scores[b]
            .partial_cmp(&scores[a])
            .expect("scores must not be NaN")
    });

    let mut points = vec![RocPoint { fpr: 0.0, tpr: 0.0 }];
    let mut thresholds = vec![f64::INFINITY];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < order.len() {
        let cut = scores[order[i]];
        // Consume the whole tie group at this score.
        while i < order.len() && scores[order[i]] == cut {
            match y_true[order[i]] {
                ClassLabel::Intrusion => tp += 1,
                ClassLabel::Normal => fp += 1,
            }
            i += 1;
        }
        points.push(RocPoint {
            fpr: fp as f64 / n_neg as f64,
            tpr: tp as f64 / n_pos as f64,
        });
        thresholds.push(cut.to_f64_lossy());
    }
    Ok(RocCurve { points, thresholds })
}

/// Trapezoidal area under the ROC curve. Equals the probability that a random
/// intrusion scores above a random normal (ties counted ½).
pub fn auc<F: Float>(y_true: &[ClassLabel], scores: &[F]) -> Result<f64, MetricsError> {
    let curve = roc_curve(y_true, scores)?;
    let mut area = 0.0;
    for w in curve.points.windows(2) {
        area += (w[1].fpr - w[0].fpr) * (w[1].tpr + w[0].tpr) / 2.0;
    }
    Ok(area)
}

/// Single-number detector ranking: log₁₀ of recall over FPR, with both
/// floored at ε = 1/(2·n_neg) so zero FPR yields a finite, comparable value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogRatio {
    pub value: f64,
    /// The floor applied to numerator and denominator; always reported.
    pub epsilon: f64,
}

pub fn log_ratio(recall: f64, fpr: f64, n_neg: usize) -> LogRatio {
    assert!(n_neg > 0, "log_ratio needs at least one negative item");
    let epsilon = 1.0 / (2.0 * n_neg as f64);
    let value = (recall.max(epsilon) / fpr.max(epsilon)).log10();
    LogRatio { value, epsilon }
}

/// One evaluated (model × dataset × provenance) cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub model: String,
    pub dataset: String,
    pub provenance: Provenance,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub fpr: f64,
    pub macro_f1: f64,
    pub auc: f64,
    pub log_ratio: f64,
    pub log_ratio_epsilon: f64,
    pub test_size: usize,
    pub test_negatives: usize,
    pub zero_division: bool,
}

/// Evaluates score outputs against truth: thresholds scores into predictions
/// (`score > threshold` ⇒ intrusion; exactly at threshold ⇒ normal), then
/// fills a full report. `threshold` is 0.5 for probabilistic models and 0 for
/// margin models.
pub fn evaluate_scores<F: Float>(
    y_true: &[ClassLabel],
    scores: &[F],
    threshold: f64,
    model: &str,
    dataset: &str,
    provenance: Provenance,
) -> Result<MetricsReport, MetricsError> {
    if y_true.len() != scores.len() {
        return Err(MetricsError::LengthMismatch {
            left: y_true.len(),
            right: scores.len(),
        });
    }
    if y_true.is_empty() {
        return Err(MetricsError::Empty);
    }
    let y_pred: Vec<ClassLabel> = scores
        .iter()
        .map(|s| {
            if s.to_f64_lossy() > threshold {
                ClassLabel::Intrusion
            } else {
                ClassLabel::Normal
            }
        })
        .collect();
    let cm = confusion(y_true, &y_pred)?;
    let rates = classification_metrics(&cm)?;
    let auc = auc(y_true, scores)?;
    let n_neg = cm.negatives();
    let lr = log_ratio(rates.recall, rates.fpr, n_neg);
    Ok(MetricsReport {
        model: model.to_string(),
        dataset: dataset.to_string(),
        provenance,
        accuracy: rates.accuracy,
        precision: rates.precision,
        recall: rates.recall,
        fpr: rates.fpr,
        macro_f1: rates.macro_f1,
        auc,
        log_ratio: lr.value,
        log_ratio_epsilon: lr.epsilon,
        test_size: cm.total(),
        test_negatives: n_neg,
        zero_division: rates.zero_division,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroupBy {
    Model,
    Dataset,
    Provenance,
}

/// Arithmetic means of every rate over one group.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregateRow {
    pub key: String,
    pub count: usize,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub fpr: f64,
    pub macro_f1: f64,
    pub auc: f64,
    pub log_ratio: f64,
}

/// Per-dataset original/processed contrast: how many times higher the
/// original FPR (and recall, inverted) is than the processed one. Zero
/// denominators are floored with the processed group's ε.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DatasetRatioRow {
    pub dataset: String,
    pub avg_fpr_original: f64,
    pub avg_fpr_processed: f64,
    pub fpr_ratio: f64,
    pub avg_recall_original: f64,
    pub avg_recall_processed: f64,
    pub recall_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregateSummary {
    pub means: Vec<AggregateRow>,
    pub dataset_ratios: Vec<DatasetRatioRow>,
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut n = 0usize;
    for v in values {
        sum += v;
        n += 1;
    }
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// Floors a ratio's denominator with ε so "times higher" stays finite.
pub fn floored_ratio(numerator: f64, denominator: f64, epsilon: f64) -> f64 {
    numerator / denominator.max(epsilon)
}

/// Groups reports by the requested key and averages each rate; additionally
/// emits per-dataset original/processed ratio rows when both provenances are
/// present. Keys are sorted, so output order is deterministic.
pub fn aggregate(reports: &[MetricsReport], group_by: GroupBy) -> AggregateSummary {
    let key_of = |r: &MetricsReport| -> String {
        match group_by {
            GroupBy::Model => r.model.clone(),
            GroupBy::Dataset => r.dataset.clone(),
            GroupBy::Provenance => match r.provenance {
                Provenance::Original => "original".to_string(),
                Provenance::Processed => "processed".to_string(),
            },
        }
    };

    let mut groups: BTreeMap<String, Vec<&MetricsReport>> = BTreeMap::new();
    for r in reports {
        groups.entry(key_of(r)).or_default().push(r);
    }
    let means = groups
        .into_iter()
        .map(|(key, rs)| AggregateRow {
            key,
            count: rs.len(),
            accuracy: mean(rs.iter().map(|r| r.accuracy)),
            precision: mean(rs.iter().map(|r| r.precision)),
            recall: mean(rs.iter().map(|r| r.recall)),
            fpr: mean(rs.iter().map(|r| r.fpr)),
            macro_f1: mean(rs.iter().map(|r| r.macro_f1)),
            auc: mean(rs.iter().map(|r| r.auc)),
            log_ratio: mean(rs.iter().map(|r| r.log_ratio)),
        })
        .collect();

    let mut datasets: BTreeMap<String, (Vec<&MetricsReport>, Vec<&MetricsReport>)> =
        BTreeMap::new();
    for r in reports {
        let entry = datasets.entry(r.dataset.clone()).or_default();
        match r.provenance {
            Provenance::Original => entry.0.push(r),
            Provenance::Processed => entry.1.push(r),
        }
    }
    let dataset_ratios = datasets
        .into_iter()
        .filter(|(_, (orig, proc))| !orig.is_empty() && !proc.is_empty())
        .map(|(dataset, (orig, proc))| {
            let avg_fpr_original = mean(orig.iter().map(|r| r.fpr));
            let avg_fpr_processed = mean(proc.iter().map(|r| r.fpr));
            let avg_recall_original = mean(orig.iter().map(|r| r.recall));
            let avg_recall_processed = mean(proc.iter().map(|r| r.recall));
            // ε from the processed group's negative counts (they share a split).
            let epsilon = proc
                .iter()
                .map(|r| 1.0 / (2.0 * r.test_negatives.max(1) as f64))
                .fold(f64::INFINITY, f64::min);
            DatasetRatioRow {
                dataset,
                avg_fpr_original,
                avg_fpr_processed,
                fpr_ratio: floored_ratio(avg_fpr_original, avg_fpr_processed, epsilon),
                avg_recall_original,
                avg_recall_processed,
                recall_ratio: floored_ratio(avg_recall_processed, avg_recall_original, epsilon),
            }
        })
        .collect();

    AggregateSummary {
        means,
        dataset_ratios,
    }
}
