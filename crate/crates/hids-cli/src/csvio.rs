//! CSV artifact schemas (v1) and read/write helpers.
//!
//! One file per table, comma-separated with a header row:
//!
//! - `reports.csv`: one row per (dataset, provenance, model) cell
//! - `aggregates.csv`: rate means grouped by model, dataset, and provenance
//! - `before_after.csv`: per-dataset original/processed contrast
//! - `scorecards.csv`: one data-quality row per dataset
//! - `histogram.csv`: per-syscall frequency counts per (dataset, provenance, class)
//! - `roc_points.csv`: ROC sweep points per cell
//! - `errors.csv`: one row per failed cell or stage
//!
//! Figures are rendered by re-reading these files, so every number in a plot
//! is byte-identical to a CSV value.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use hids_core::metrics::{AggregateRow, MetricsReport};
use hids_core::preprocess::{ClassLabel, Provenance};
use hids_core::quality::{BeforeAfterRow, QualityScorecard};

use crate::CliError;

pub const REPORTS_CSV: &str = "reports.csv";
pub const AGGREGATES_CSV: &str = "aggregates.csv";
pub const BEFORE_AFTER_CSV: &str = "before_after.csv";
pub const SCORECARDS_CSV: &str = "scorecards.csv";
pub const HISTOGRAM_CSV: &str = "histogram.csv";
pub const ROC_POINTS_CSV: &str = "roc_points.csv";
pub const ERRORS_CSV: &str = "errors.csv";
pub const RUN_JSON: &str = "run.json";
pub const SUMMARY_MD: &str = "summary.md";
pub const FIGURES_DIR: &str = "figures";
pub const MODELS_DIR: &str = "models";
pub const POOLS_DIR: &str = "pools";

pub fn provenance_str(p: Provenance) -> &'static str {
    match p {
        Provenance::Original => "original",
        Provenance::Processed => "processed",
    }
}

pub fn class_str(c: ClassLabel) -> &'static str {
    match c {
        ClassLabel::Normal => "normal",
        ClassLabel::Intrusion => "intrusion",
    }
}

/// `reports.csv` row: the full per-cell evaluation, plus the hyperparameters
/// that produced it (JSON in the `params` column) for auditability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub dataset: String,
    pub provenance: String,
    pub model: String,
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
    pub params: String,
}

impl ReportRow {
    pub fn from_report(r: &MetricsReport, params: &str) -> Self {
        Self {
            dataset: r.dataset.clone(),
            provenance: provenance_str(r.provenance).to_string(),
            model: r.model.clone(),
            accuracy: r.accuracy,
            precision: r.precision,
            recall: r.recall,
            fpr: r.fpr,
            macro_f1: r.macro_f1,
            auc: r.auc,
            log_ratio: r.log_ratio,
            log_ratio_epsilon: r.log_ratio_epsilon,
            test_size: r.test_size,
            test_negatives: r.test_negatives,
            zero_division: r.zero_division,
            params: params.to_string(),
        }
    }
}

/// `aggregates.csv` row: means over one group; `group` is the grouping axis
/// (`model`, `dataset`, or `provenance`) and `key` the group member.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateCsvRow {
    pub group: String,
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

impl AggregateCsvRow {
    pub fn from_row(group: &str, r: &AggregateRow) -> Self {
        Self {
            group: group.to_string(),
            key: r.key.clone(),
            count: r.count,
            accuracy: r.accuracy,
            precision: r.precision,
            recall: r.recall,
            fpr: r.fpr,
            macro_f1: r.macro_f1,
            auc: r.auc,
            log_ratio: r.log_ratio,
        }
    }
}

/// `before_after.csv` row: model-averaged recall/FPR per provenance and the
/// "times higher/better" ratios, one row per dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeforeAfterCsvRow {
    pub dataset: String,
    pub avg_recall_original: f64,
    pub avg_recall_processed: f64,
    pub avg_fpr_original: f64,
    pub avg_fpr_processed: f64,
    pub fpr_ratio: f64,
    pub recall_ratio: f64,
}

impl BeforeAfterCsvRow {
    pub fn from_row(r: &BeforeAfterRow) -> Self {
        Self {
            dataset: r.dataset.clone(),
            avg_recall_original: r.avg_recall_original,
            avg_recall_processed: r.avg_recall_processed,
            avg_fpr_original: r.avg_fpr_original,
            avg_fpr_processed: r.avg_fpr_processed,
            fpr_ratio: r.fpr_ratio,
            recall_ratio: r.recall_ratio,
        }
    }
}

/// `scorecards.csv` row: flattened [`QualityScorecard`].
/// `per_position_coverage` is a `;`-joined list, one value per gram position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScorecardRow {
    pub dataset: String,
    pub duplication_rate_normal: f64,
    pub duplication_rate_intrusion: f64,
    pub trace_duplication_normal: f64,
    pub trace_duplication_intrusion: f64,
    pub cross_class_overlap: f64,
    pub cross_class_overlap_processed: f64,
    pub class_balance: f64,
    pub trace_class_balance: f64,
    pub distinct_grams: usize,
    pub observed_vocabulary: usize,
    pub vocab_size: usize,
    pub vocabulary_coverage: f64,
    pub per_position_coverage: String,
    pub consistency_violations: usize,
    pub train_test_value_overlap: f64,
    pub reputation: String,
    pub relevance: String,
    pub timeliness: String,
    pub context: String,
}

impl ScorecardRow {
    pub fn from_scorecard(c: &QualityScorecard) -> Self {
        let declared = |key: &str| -> String {
            c.declared
                .get(key)
                .cloned()
                .unwrap_or_else(|| "undeclared".to_string())
        };
        Self {
            dataset: c.dataset.clone(),
            duplication_rate_normal: c.duplication_rate_normal,
            duplication_rate_intrusion: c.duplication_rate_intrusion,
            trace_duplication_normal: c.trace_duplication_normal,
            trace_duplication_intrusion: c.trace_duplication_intrusion,
            cross_class_overlap: c.cross_class_overlap,
            cross_class_overlap_processed: c.cross_class_overlap_processed,
            class_balance: c.class_balance,
            trace_class_balance: c.trace_class_balance,
            distinct_grams: c.variety.distinct_grams,
            observed_vocabulary: c.variety.observed_vocabulary,
            vocab_size: c.variety.vocab_size,
            vocabulary_coverage: c.variety.vocabulary_coverage,
            per_position_coverage: c
                .variety
                .per_position_coverage
                .iter()
                .map(|v| v.to_string())
                .collect::<Vec<_>>()
                .join(";"),
            consistency_violations: c.consistency_violations,
            train_test_value_overlap: c.train_test_value_overlap,
            reputation: declared("reputation"),
            relevance: declared("relevance"),
            timeliness: declared("timeliness"),
            context: declared("context"),
        }
    }
}

/// `histogram.csv` row: occurrences of one syscall id in one class of one
/// provenance's sequence pool.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistogramRow {
    pub dataset: String,
    pub provenance: String,
    pub class: String,
    pub syscall: u32,
    pub count: usize,
}

/// `roc_points.csv` row. The threshold of the first curve point is +infinity,
/// written as `inf`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocPointRow {
    pub dataset: String,
    pub provenance: String,
    pub model: String,
    pub threshold: f64,
    pub fpr: f64,
    pub tpr: f64,
}

/// `errors.csv` row: one failed cell or assembly stage. `model` is `*` when
/// the failure covers every model of the dataset.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorRow {
    pub dataset: String,
    pub provenance: String,
    pub model: String,
    pub stage: String,
    pub message: String,
}

/// Writes rows as CSV with a header row. An empty slice still writes the
/// header so consumers can rely on the file existing with its schema.
pub fn write_csv<T: Serialize + 'static>(path: &Path, rows: &[T]) -> Result<(), CliError> {
    let file = File::create(path)
        .map_err(|e| CliError::Failure(format!("cannot create {}: {e}", path.display())))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    for row in rows {
        w.serialize(row)
            .map_err(|e| CliError::Failure(format!("cannot write {}: {e}", path.display())))?;
    }
    // serde-based headers are only emitted with the first record; write them
    // explicitly for empty tables.
    if rows.is_empty() {
        if let Some(headers) = headers_of::<T>() {
            w.write_record(&headers)
                .map_err(|e| CliError::Failure(format!("cannot write {}: {e}", path.display())))?;
        }
    }
    w.flush()
        .map_err(|e| CliError::Failure(format!("cannot flush {}: {e}", path.display())))?;
    Ok(())
}

/// Field names of a row struct, recovered through serde so the header always
/// matches the serialized shape.
fn headers_of<T: Serialize + 'static>() -> Option<Vec<String>> {
    // serde cannot enumerate fields without an instance, so the known row
    // types are listed here; new tables must be added alongside.
    use std::any::TypeId;

    fn names<const N: usize>(names: [&str; N]) -> Option<Vec<String>> {
        Some(names.iter().map(|s| s.to_string()).collect())
    }

    let t = TypeId::of::<T>();
    if t == TypeId::of::<ReportRow>() {
        names([
            "dataset",
            "provenance",
            "model",
            "accuracy",
            "precision",
            "recall",
            "fpr",
            "macro_f1",
            "auc",
            "log_ratio",
            "log_ratio_epsilon",
            "test_size",
            "test_negatives",
            "zero_division",
            "params",
        ])
    } else if t == TypeId::of::<AggregateCsvRow>() {
        names([
            "group",
            "key",
            "count",
            "accuracy",
            "precision",
            "recall",
            "fpr",
            "macro_f1",
            "auc",
            "log_ratio",
        ])
    } else if t == TypeId::of::<BeforeAfterCsvRow>() {
        names([
            "dataset",
            "avg_recall_original",
            "avg_recall_processed",
            "avg_fpr_original",
            "avg_fpr_processed",
            "fpr_ratio",
            "recall_ratio",
        ])
    } else if t == TypeId::of::<ScorecardRow>() {
        names([
            "dataset",
            "duplication_rate_normal",
            "duplication_rate_intrusion",
            "trace_duplication_normal",
            "trace_duplication_intrusion",
            "cross_class_overlap",
            "cross_class_overlap_processed",
            "class_balance",
            "trace_class_balance",
            "distinct_grams",
            "observed_vocabulary",
            "vocab_size",
            "vocabulary_coverage",
            "per_position_coverage",
            "consistency_violations",
            "train_test_value_overlap",
            "reputation",
            "relevance",
            "timeliness",
            "context",
        ])
    } else if t == TypeId::of::<HistogramRow>() {
        names(["dataset", "provenance", "class", "syscall", "count"])
    } else if t == TypeId::of::<RocPointRow>() {
        names(["dataset", "provenance", "model", "threshold", "fpr", "tpr"])
    } else if t == TypeId::of::<ErrorRow>() {
        names(["dataset", "provenance", "model", "stage", "message"])
    } else {
        None
    }
}

/// Reads a whole CSV table written by [`write_csv`].
pub fn read_csv<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, CliError> {
    let file = File::open(path)
        .map_err(|e| CliError::Failure(format!("cannot open {}: {e}", path.display())))?;
    let mut rows = Vec::new();
    for row in csv::Reader::from_reader(BufReader::new(file)).deserialize() {
        rows.push(
            row.map_err(|e| CliError::Failure(format!("cannot parse {}: {e}", path.display())))?,
        );
    }
    Ok(rows)
}
