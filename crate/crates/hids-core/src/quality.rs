//! Data-quality measurements: duplication, cross-class overlap, class
//! balance, variety, consistency, and the per-dataset scorecard plus the
//! before/after (original vs processed) model-performance comparison.
//!
//! Reputation, relevance, timeliness, and context are *declared* dimensions:
//! free-form manifest strings copied verbatim (or "undeclared"), never
//! computed.

use std::collections::{BTreeMap, HashSet};

use serde::Serialize;

use crate::corpus::{DatasetFormat, RawDataset};
use crate::metrics::MetricsReport;
use crate::preprocess::{ClassLabel, PreparedSplit, Provenance, Sequence, SequencePool};

#[derive(Debug, thiserror::Error)]
pub enum QualityError {
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("class {0} is missing")]
    MissingClass(ClassLabel),
    #[error("dataset {dataset} has no {provenance:?} reports")]
    MissingProvenance {
        dataset: String,
        provenance: Provenance,
    },
}

/// 1 − distinct/total: the fraction of sequences that are repeats.
pub fn duplication_rate(seqs: &[Sequence]) -> Result<f64, QualityError> {
    if seqs.is_empty() {
        return Err(QualityError::Empty("duplication_rate"));
    }
    let distinct: HashSet<&[u32]> = seqs.iter().map(Vec::as_slice).collect();
    Ok(1.0 - distinct.len() as f64 / seqs.len() as f64)
}

/// Jaccard overlap of the classes' distinct sequence values:
/// |∩| / |∪| over distinct values.
pub fn cross_class_overlap(
    normal: &[Sequence],
    intrusion: &[Sequence],
) -> Result<f64, QualityError> {
    if normal.is_empty() {
        return Err(QualityError::MissingClass(ClassLabel::Normal));
    }
    if intrusion.is_empty() {
        return Err(QualityError::MissingClass(ClassLabel::Intrusion));
    }
    let a: HashSet<&[u32]> = normal.iter().map(Vec::as_slice).collect();
    let b: HashSet<&[u32]> = intrusion.iter().map(Vec::as_slice).collect();
    let inter = a.intersection(&b).count();
    let union = a.len() + b.len() - inter;
    Ok(inter as f64 / union as f64)
}

/// Minority count / majority count ∈ (0, 1].
pub fn class_balance(pool: &SequencePool) -> Result<f64, QualityError> {
    let (n_normal, n_intrusion) = pool.class_counts();
    if n_normal == 0 {
        return Err(QualityError::MissingClass(ClassLabel::Normal));
    }
    if n_intrusion == 0 {
        return Err(QualityError::MissingClass(ClassLabel::Intrusion));
    }
    Ok(n_normal.min(n_intrusion) as f64 / n_normal.max(n_intrusion) as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VarietyRecord {
    /// Number of distinct sequence values.
    pub distinct_grams: usize,
    /// Distinct syscall ids observed anywhere in the sequences.
    pub observed_vocabulary: usize,
    /// Declared vocabulary size the coverage fractions are relative to.
    pub vocab_size: usize,
    /// observed_vocabulary / vocab_size.
    pub vocabulary_coverage: f64,
    /// Fraction of the vocabulary observed at each gram position.
    pub per_position_coverage: Vec<f64>,
}

/// Coverage measurements over a set of fixed-length sequences.
pub fn variety(seqs: &[Sequence], vocab_size: usize) -> VarietyRecord {
    assert!(vocab_size > 0, "vocab_size must be positive");
    let distinct_grams = seqs.iter().map(Vec::as_slice).collect::<HashSet<_>>().len();
    let mut all_values: HashSet<u32> = HashSet::new();
    let n = seqs.first().map_or(0, Vec::len);
    let mut per_position: Vec<HashSet<u32>> = vec![HashSet::new(); n];
    for s in seqs {
        for (pos, &v) in s.iter().enumerate() {
            all_values.insert(v);
            per_position[pos].insert(v);
        }
    }
    VarietyRecord {
        distinct_grams,
        observed_vocabulary: all_values.len(),
        vocab_size,
        vocabulary_coverage: all_values.len() as f64 / vocab_size as f64,
        per_position_coverage: per_position
            .iter()
            .map(|set| set.len() as f64 / vocab_size as f64)
            .collect(),
    }
}

/// Counts integrity violations: syscall values outside `[0, max_syscall]`,
/// plus (UNM format only) interleaving anomalies — a record resuming a
/// previously seen PID after other PIDs intervened. Report-only.
pub fn consistency_check(ds: &RawDataset, max_syscall: u32) -> usize {
    let mut violations = 0usize;
    for t in ds.normal_traces.iter().chain(&ds.intrusion_traces) {
        violations += t.events.iter().filter(|&&v| v > max_syscall).count();
    }
    if ds.manifest.format == DatasetFormat::Unm {
        for stream in &ds.pid_streams {
            let mut seen: HashSet<u32> = HashSet::new();
            let mut prev: Option<u32> = None;
            for &pid in &stream.pids {
                if prev != Some(pid) && seen.contains(&pid) {
                    violations += 1;
                }
                seen.insert(pid);
                prev = Some(pid);
            }
        }
    }
    violations
}

/// The declared (non-computed) quality dimensions, copied from manifest
/// metadata.
pub const DECLARED_DIMENSIONS: [&str; 4] = ["reputation", "relevance", "timeliness", "context"];

/// Per-dataset quality measurements. All computed values are deterministic
/// functions of the pipeline outputs; no composite single score is produced.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QualityScorecard {
    pub dataset: String,
    pub duplication_rate_normal: f64,
    pub duplication_rate_intrusion: f64,
    /// Duplication among whole traces (pre-tokenization), per class. Sensitive
    /// to record-level duplication that gram-level rates dilute.
    pub trace_duplication_normal: f64,
    pub trace_duplication_intrusion: f64,
    /// Overlap measured on the original (pre-cleaning) pool.
    pub cross_class_overlap: f64,
    /// Overlap after cleaning; 0 whenever de-duplication ran.
    pub cross_class_overlap_processed: f64,
    pub class_balance: f64,
    /// Minority/majority ratio of whole-trace counts (pre-tokenization).
    pub trace_class_balance: f64,
    pub variety: VarietyRecord,
    pub consistency_violations: usize,
    /// Fraction of test items whose value also appears in train.
    pub train_test_value_overlap: f64,
    pub declared: BTreeMap<String, String>,
}

fn class_values(pool: &SequencePool, label: ClassLabel) -> Vec<Sequence> {
    pool.of_class(label).map(|s| s.seq.clone()).collect()
}

/// Assembles the scorecard from a finished pipeline run. Measured dimensions
/// come from the original pool (the dataset as collected); the processed
/// overlap is included to show the cleaning effect.
pub fn scorecard(
    ds: &RawDataset,
    original: &SequencePool,
    processed: &SequencePool,
    split: &PreparedSplit,
) -> Result<QualityScorecard, QualityError> {
    let normal = class_values(original, ClassLabel::Normal);
    let intrusion = class_values(original, ClassLabel::Intrusion);
    let all: Vec<Sequence> = normal.iter().chain(&intrusion).cloned().collect();

    let trace_events = |traces: &[crate::corpus::Trace]| -> Vec<Sequence> {
        traces.iter().map(|t| t.events.clone()).collect()
    };
    let normal_trace_seqs = trace_events(&ds.normal_traces);
    let intrusion_trace_seqs = trace_events(&ds.intrusion_traces);
    let trace_duplication_normal = duplication_rate(&normal_trace_seqs)?;
    let trace_duplication_intrusion = duplication_rate(&intrusion_trace_seqs)?;
    let (n_traces, i_traces) = (ds.normal_traces.len(), ds.intrusion_traces.len());
    let trace_class_balance = n_traces.min(i_traces) as f64 / n_traces.max(i_traces) as f64;

    let proc_normal = class_values(processed, ClassLabel::Normal);
    let proc_intrusion = class_values(processed, ClassLabel::Intrusion);
    let cross_class_overlap_processed = if proc_normal.is_empty() || proc_intrusion.is_empty() {
        0.0
    } else {
        cross_class_overlap(&proc_normal, &proc_intrusion)?
    };

    let train_values: HashSet<&[u32]> = split.train.iter().map(|s| s.seq.as_slice()).collect();
    let overlap_count = split
        .test
        .iter()
        .filter(|s| train_values.contains(s.seq.as_slice()))
        .count();
    let train_test_value_overlap = if split.test.is_empty() {
        0.0
    } else {
        overlap_count as f64 / split.test.len() as f64
    };

    let mut declared = BTreeMap::new();
    for key in DECLARED_DIMENSIONS {
        let value = ds
            .manifest
            .metadata
            .get(key)
            .cloned()
            .unwrap_or_else(|| "undeclared".to_string());
        declared.insert(key.to_string(), value);
    }

    Ok(QualityScorecard {
        dataset: ds.manifest.name.clone(),
        duplication_rate_normal: duplication_rate(&normal)?,
        duplication_rate_intrusion: duplication_rate(&intrusion)?,
        trace_duplication_normal,
        trace_duplication_intrusion,
        cross_class_overlap: cross_class_overlap(&normal, &intrusion)?,
        cross_class_overlap_processed,
        class_balance: class_balance(original)?,
        trace_class_balance,
        variety: variety(&all, ds.manifest.max_syscall as usize + 1),
        consistency_violations: consistency_check(ds, ds.manifest.max_syscall),
        train_test_value_overlap,
        declared,
    })
}

/// One dataset's model-averaged original-vs-processed contrast.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BeforeAfterRow {
    pub dataset: String,
    pub avg_recall_original: f64,
    pub avg_recall_processed: f64,
    pub avg_fpr_original: f64,
    pub avg_fpr_processed: f64,
    /// avg_fpr_original / avg_fpr_processed ("times higher"), ε-floored.
    pub fpr_ratio: f64,
    /// avg_recall_processed / avg_recall_original, ε-floored.
    pub recall_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BeforeAfterComparison {
    pub rows: Vec<BeforeAfterRow>,
}

/// Averages reports across models per (dataset, provenance) and computes the
/// original/processed ratios. Every dataset must appear with both
/// provenances.
pub fn before_after(reports: &[MetricsReport]) -> Result<BeforeAfterComparison, QualityError> {
    let mut datasets: BTreeMap<String, (Vec<&MetricsReport>, Vec<&MetricsReport>)> =
        BTreeMap::new();
    for r in reports {
        let entry = datasets.entry(r.dataset.clone()).or_default();
        match r.provenance {
            Provenance::Original => entry.0.push(r),
            Provenance::Processed => entry.1.push(r),
        }
    }
    let mut rows = Vec::new();
    for (dataset, (orig, proc)) in datasets {
        if orig.is_empty() {
            return Err(QualityError::MissingProvenance {
                dataset,
                provenance: Provenance::Original,
            });
        }
        if proc.is_empty() {
            return Err(QualityError::MissingProvenance {
                dataset,
                provenance: Provenance::Processed,
            });
        }
        let mean = |rs: &[&MetricsReport], f: fn(&MetricsReport) -> f64| -> f64 {
            rs.iter().map(|r| f(r)).sum::<f64>() / rs.len() as f64
        };
        let avg_recall_original = mean(&orig, |r| r.recall);
        let avg_recall_processed = mean(&proc, |r| r.recall);
        let avg_fpr_original = mean(&orig, |r| r.fpr);
        let avg_fpr_processed = mean(&proc, |r| r.fpr);
        let epsilon = proc
            .iter()
            .chain(&orig)
            .map(|r| 1.0 / (2.0 * r.test_negatives.max(1) as f64))
            .fold(f64::INFINITY, f64::min);
        rows.push(BeforeAfterRow {
            dataset,
            avg_recall_original,
            avg_recall_processed,
            avg_fpr_original,
            avg_fpr_processed,
            fpr_ratio: avg_fpr_original / avg_fpr_processed.max(epsilon),
            recall_ratio: avg_recall_processed / avg_recall_original.max(epsilon),
        });
    }
    Ok(BeforeAfterComparison { rows })
}
