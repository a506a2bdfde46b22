//! Data preparation: tokenization, cross-class de-duplication, bootstrap
//! balancing, and the seeded stratified train/test split.
//!
//! The full pipeline composes, in order: per-PID grouping (done at load time
//! for the `unm` format) → n-gram tokenization → labeling → cross-class
//! de-duplication → bootstrap balancing → stratified split. Balancing happens
//! **before** splitting, so identical sequence values can land in both train
//! and test; [`PipelineStats::train_test_value_overlap`] measures how often
//! that happens rather than hiding it.
//!
//! Every random stage draws from a ChaCha8 stream seeded via
//! [`crate::derive_seed`] with a fixed stage tag, so each stage is
//! reproducible in isolation:
//!
//! | stage              | tag                      |
//! |--------------------|--------------------------|
//! | bootstrap balance  | `pipeline/balance`       |
//! | split, per class   | `split/class<label>`     |
//! | split, final order | `split/final/train(test)`|

use std::collections::{HashMap, HashSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{DatasetFormat, RawDataset, Trace};
use crate::derive_seed;

pub use crate::corpus::group_by_pid;

/// A fixed-length window of syscall numbers (length = configured `n`).
pub type Sequence = Vec<u32>;

#[derive(Debug, thiserror::Error)]
pub enum PreprocessError {
    #[error("cannot balance: empty class ({0})")]
    EmptyClass(ClassLabel),
    #[error("cannot stratify: class {label} has {count} item(s), need at least 2")]
    CannotStratify { label: ClassLabel, count: usize },
    #[error("invalid pipeline config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassLabel {
    Normal = 0,
    Intrusion = 1,
}

impl ClassLabel {
    pub const ALL: [ClassLabel; 2] = [ClassLabel::Normal, ClassLabel::Intrusion];

    pub fn as_u8(self) -> u8 {
        self as u8
    }

    pub fn as_f64(self) -> f64 {
        f64::from(self as u8)
    }
}

impl std::fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ClassLabel::Normal => write!(f, "normal"),
            ClassLabel::Intrusion => write!(f, "intrusion"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LabeledSequence {
    pub seq: Sequence,
    pub label: ClassLabel,
}

impl LabeledSequence {
    pub fn new(seq: Sequence, label: ClassLabel) -> Self {
        Self { seq, label }
    }
}

/// Whether a pool is the raw tokenized data or the cleaned version.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Original,
    Processed,
}

/// A labeled bag of fixed-length sequences. `Processed` provenance promises
/// that the distinct value sets of the two classes are disjoint.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SequencePool {
    pub sequences: Vec<LabeledSequence>,
    pub provenance: Provenance,
}

impl SequencePool {
    pub fn new(sequences: Vec<LabeledSequence>, provenance: Provenance) -> Self {
        Self {
            sequences,
            provenance,
        }
    }

    pub fn len(&self) -> usize {
        self.sequences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sequences.is_empty()
    }

    /// `(normal, intrusion)` item counts.
    pub fn class_counts(&self) -> (usize, usize) {
        let normal = self
            .sequences
            .iter()
            .filter(|s| s.label == ClassLabel::Normal)
            .count();
        (normal, self.sequences.len() - normal)
    }

    pub fn of_class(&self, label: ClassLabel) -> impl Iterator<Item = &LabeledSequence> {
        self.sequences.iter().filter(move |s| s.label == label)
    }

    /// Distinct sequence values present in one class.
    pub fn distinct_values(&self, label: ClassLabel) -> HashSet<&[u32]> {
        self.of_class(label).map(|s| s.seq.as_slice()).collect()
    }

    /// Checks the processed-pool promise: no sequence value in both classes.
    pub fn check_disjoint(&self) -> bool {
        let normal = self.distinct_values(ClassLabel::Normal);
        self.distinct_values(ClassLabel::Intrusion)
            .iter()
            .all(|v| !normal.contains(v))
    }
}

/// Deterministic train/test partition of a pool.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedSplit {
    pub train: Vec<LabeledSequence>,
    pub test: Vec<LabeledSequence>,
    pub seed: u64,
    pub ratio: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BalancePolicy {
    /// Resample the minority class with replacement up to the majority count.
    BootstrapToMax,
    /// Leave class counts as they are.
    None,
}

/// Knobs for [`run_pipeline`]. Serialization matches the manifest's
/// `[pipeline]` table; all fields have defaults so partial tables work.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Gram length.
    pub n: usize,
    /// Window step; 1 = fully overlapping windows.
    pub stride: usize,
    pub balance: BalancePolicy,
    /// Train fraction, exclusive bounds (0, 1).
    pub ratio: f64,
    /// Root seed; stage seeds are derived from it.
    pub seed: u64,
    /// Remove sequence values appearing in both classes.
    pub dedup: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            n: 6,
            stride: 1,
            balance: BalancePolicy::BootstrapToMax,
            ratio: 0.7,
            seed: 42,
            dedup: true,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), PreprocessError> {
        if self.n < 1 {
            return Err(PreprocessError::InvalidConfig("n must be >= 1".into()));
        }
        if self.stride < 1 || self.stride > self.n {
            return Err(PreprocessError::InvalidConfig(format!(
                "stride must be in [1, n={}], got {}",
                self.n, self.stride
            )));
        }
        if !(self.ratio > 0.0 && self.ratio < 1.0) {
            return Err(PreprocessError::InvalidConfig(format!(
                "ratio must be in (0, 1), got {}",
                self.ratio
            )));
        }
        Ok(())
    }
}

/// Sliding windows of length `n` at offsets `0, stride, 2·stride, …`.
/// Traces shorter than `n` yield no windows.
pub fn tokenize_ngrams(trace: &Trace, n: usize, stride: usize) -> Vec<Sequence> {
    assert!(n >= 1, "gram length must be >= 1");
    assert!(
        (1..=n).contains(&stride),
        "stride must be in [1, n={n}], got {stride}"
    );
    if trace.events.len() < n {
        return Vec::new();
    }
    trace
        .events
        .windows(n)
        .step_by(stride)
        .map(|w| w.to_vec())
        .collect()
}

/// Removes every sequence value present in both classes from **both** lists
/// (all occurrences). Within-class duplicates of surviving values are kept:
/// repetition encodes how common a behavior is.
pub fn dedup_cross_class(
    normal: &[Sequence],
    intrusion: &[Sequence],
) -> (Vec<Sequence>, Vec<Sequence>) {
    let normal_set: HashSet<&[u32]> = normal.iter().map(Vec::as_slice).collect();
    let intrusion_set: HashSet<&[u32]> = intrusion.iter().map(Vec::as_slice).collect();
    let shared: HashSet<&[u32]> = normal_set.intersection(&intrusion_set).copied().collect();
    let keep = |seqs: &[Sequence]| {
        seqs.iter()
            .filter(|s| !shared.contains(s.as_slice()))
            .cloned()
            .collect::<Vec<_>>()
    };
    (keep(normal), keep(intrusion))
}

/// Oversamples the minority class with replacement (seeded) up to the
/// majority count. Original items are kept; resampled copies are appended,
/// so the result's class counts are equal. Provenance is preserved.
pub fn bootstrap_balance(pool: &SequencePool, seed: u64) -> Result<SequencePool, PreprocessError> {
    let (n_normal, n_intrusion) = pool.class_counts();
    if n_normal == 0 {
        return Err(PreprocessError::EmptyClass(ClassLabel::Normal));
    }
    if n_intrusion == 0 {
        return Err(PreprocessError::EmptyClass(ClassLabel::Intrusion));
    }
    if n_normal == n_intrusion {
        return Ok(pool.clone());
    }
    let (minority, deficit) = if n_normal < n_intrusion {
        (ClassLabel::Normal, n_intrusion - n_normal)
    } else {
        (ClassLabel::Intrusion, n_normal - n_intrusion)
    };
    let minority_items: Vec<&LabeledSequence> = pool.of_class(minority).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sequences = pool.sequences.clone();
    sequences.reserve(deficit);
    for _ in 0..deficit {
        let pick = rng.gen_range(0..minority_items.len());
        sequences.push(minority_items[pick].clone());
    }
    Ok(SequencePool::new(sequences, pool.provenance))
}

/// Stratified seeded shuffle-then-cut. Each class is shuffled independently
/// with a derived seed and cut at `floor(ratio × class count)`; the combined
/// train and test lists are then shuffled once more so class blocks don't
/// stay contiguous (order-sensitive trainers see a mixed stream).
pub fn split_train_test(
    pool: &SequencePool,
    ratio: f64,
    seed: u64,
) -> Result<PreparedSplit, PreprocessError> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(PreprocessError::InvalidConfig(format!(
            "ratio must be in (0, 1), got {ratio}"
        )));
    }
    let mut train = Vec::new();
    let mut test = Vec::new();
    for label in ClassLabel::ALL {
        let mut items: Vec<&LabeledSequence> = pool.of_class(label).collect();
        if items.len() < 2 {
            return Err(PreprocessError::CannotStratify {
                label,
                count: items.len(),
            });
        }
        let mut rng =
            ChaCha8Rng::seed_from_u64(derive_seed(seed, &format!("split/class{}", label.as_u8())));
        items.shuffle(&mut rng);
        let cut = (ratio * items.len() as f64).floor() as usize;
        train.extend(items[..cut].iter().map(|s| (*s).clone()));
        test.extend(items[cut..].iter().map(|s| (*s).clone()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "split/final/train"));
    train.shuffle(&mut rng);
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "split/final/test"));
    test.shuffle(&mut rng);
    Ok(PreparedSplit {
        train,
        test,
        seed,
        ratio,
    })
}

/// Bookkeeping emitted alongside the prepared split.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct PipelineStats {
    /// Traces shorter than the gram length, dropped before tokenization.
    pub short_traces_normal: usize,
    pub short_traces_intrusion: usize,
    /// Sequences removed by cross-class de-duplication.
    pub dedup_removed_normal: usize,
    pub dedup_removed_intrusion: usize,
    /// Resampled copies appended by balancing.
    pub balance_added: usize,
    /// Fraction of test items whose sequence value also occurs in train.
    /// Non-zero overlap is expected: balancing precedes splitting.
    pub train_test_value_overlap: f64,
}

/// Everything the pipeline produces: the split plus both pools (pre- and
/// post-cleaning) for quality measurement and before/after comparisons.
#[derive(Debug, Clone)]
pub struct PipelineOutcome {
    pub split: PreparedSplit,
    pub original: SequencePool,
    pub processed: SequencePool,
    pub stats: PipelineStats,
}

/// Runs the complete preparation pipeline. The `unm` format is grouped by
/// PID at load, so traces arrive here already per-process.
pub fn run_pipeline(
    ds: &RawDataset,
    cfg: &PipelineConfig,
) -> Result<PipelineOutcome, PreprocessError> {
    cfg.validate()?;
    debug_assert!(matches!(
        ds.manifest.format,
        DatasetFormat::Unm | DatasetFormat::Adfa
    ));

    let tokenize_class = |traces: &[Trace], short: &mut usize| -> Vec<Sequence> {
        *short += traces.iter().filter(|t| t.events.len() < cfg.n).count();
        traces
            .par_iter()
            .map(|t| tokenize_ngrams(t, cfg.n, cfg.stride))
            .flatten()
            .collect()
    };

    let mut stats = PipelineStats::default();
    let normal = tokenize_class(&ds.normal_traces, &mut stats.short_traces_normal);
    let intrusion = tokenize_class(&ds.intrusion_traces, &mut stats.short_traces_intrusion);

    let label_all = |normal: &[Sequence], intrusion: &[Sequence]| -> Vec<LabeledSequence> {
        normal
            .iter()
            .map(|s| LabeledSequence::new(s.clone(), ClassLabel::Normal))
            .chain(
                intrusion
                    .iter()
                    .map(|s| LabeledSequence::new(s.clone(), ClassLabel::Intrusion)),
            )
            .collect()
    };

    let original = SequencePool::new(label_all(&normal, &intrusion), Provenance::Original);

    let processed = if cfg.dedup {
        let (kept_n, kept_i) = dedup_cross_class(&normal, &intrusion);
        stats.dedup_removed_normal = normal.len() - kept_n.len();
        stats.dedup_removed_intrusion = intrusion.len() - kept_i.len();
        let pool = SequencePool::new(label_all(&kept_n, &kept_i), Provenance::Processed);
        debug_assert!(pool.check_disjoint());
        pool
    } else {
        original.clone()
    };

    let balanced = match cfg.balance {
        BalancePolicy::BootstrapToMax => {
            let b = bootstrap_balance(&processed, derive_seed(cfg.seed, "pipeline/balance"))?;
            stats.balance_added = b.len() - processed.len();
            b
        }
        BalancePolicy::None => processed.clone(),
    };

    let split = split_train_test(&balanced, cfg.ratio, cfg.seed)?;

    let train_values: HashSet<&[u32]> = split.train.iter().map(|s| s.seq.as_slice()).collect();
    let overlapping = split
        .test
        .iter()
        .filter(|s| train_values.contains(s.seq.as_slice()))
        .count();
    stats.train_test_value_overlap = if split.test.is_empty() {
        0.0
    } else {
        overlapping as f64 / split.test.len() as f64
    };

    Ok(PipelineOutcome {
        split,
        original,
        processed,
        stats,
    })
}

/// Multiset of sequence values with occurrence counts (test helper and
/// quality-metric building block).
pub fn value_counts(seqs: &[LabeledSequence]) -> HashMap<&[u32], usize> {
    let mut counts: HashMap<&[u32], usize> = HashMap::new();
    for s in seqs {
        *counts.entry(s.seq.as_slice()).or_default() += 1;
    }
    counts
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{DatasetFormat, DatasetManifest, DroppedFiles, RawDataset};

    fn trace(events: Vec<u32>) -> Trace {
        Trace::new("t", events)
    }

    #[test]
    fn tokenize_enumerates_sliding_windows() {
        let got = tokenize_ngrams(&trace(vec![1, 2, 3, 4, 5, 6, 7]), 6, 1);
        assert_eq!(got, vec![vec![1, 2, 3, 4, 5, 6], vec![2, 3, 4, 5, 6, 7]]);
    }

    #[test]
    fn tokenize_drops_short_traces() {
        assert!(tokenize_ngrams(&trace(vec![1, 2, 3, 4, 5]), 6, 1).is_empty());
    }

    #[test]
    fn tokenize_exact_length_yields_one_window() {
        let got = tokenize_ngrams(&trace(vec![1, 2, 3, 4, 5, 6]), 6, 1);
        assert_eq!(got, vec![vec![1, 2, 3, 4, 5, 6]]);
    }

    #[test]
    fn tokenize_respects_stride() {
        let got = tokenize_ngrams(&trace(vec![1, 2, 3, 4, 5, 6]), 2, 2);
        assert_eq!(got, vec![vec![1, 2], vec![3, 4], vec![5, 6]]);
    }

    fn seqs(vals: &[&[u32]]) -> Vec<Sequence> {
        vals.iter().map(|v| v.to_vec()).collect()
    }

    #[test]
    fn dedup_removes_shared_values_from_both_classes() {
        let a: &[u32] = &[1, 1];
        let b: &[u32] = &[2, 2];
        let c: &[u32] = &[3, 3];
        let (n, i) = dedup_cross_class(&seqs(&[a, a, b]), &seqs(&[b, c]));
        assert_eq!(n, seqs(&[a, a]));
        assert_eq!(i, seqs(&[c]));
    }

    #[test]
    fn dedup_identical_classes_empties_both() {
        let vals = seqs(&[&[1, 2], &[3, 4]]);
        let (n, i) = dedup_cross_class(&vals, &vals);
        assert!(n.is_empty());
        assert!(i.is_empty());
    }

    #[test]
    fn dedup_disjoint_classes_unchanged() {
        let n_in = seqs(&[&[1, 2], &[1, 2]]);
        let i_in = seqs(&[&[3, 4]]);
        let (n, i) = dedup_cross_class(&n_in, &i_in);
        assert_eq!(n, n_in);
        assert_eq!(i, i_in);
    }

    fn pool_with_counts(n_normal: usize, n_intrusion: usize) -> SequencePool {
        let mut sequences = Vec::new();
        for k in 0..n_normal {
            sequences.push(LabeledSequence::new(vec![k as u32, 0], ClassLabel::Normal));
        }
        for k in 0..n_intrusion {
            sequences.push(LabeledSequence::new(
                vec![k as u32, 1],
                ClassLabel::Intrusion,
            ));
        }
        SequencePool::new(sequences, Provenance::Processed)
    }

    #[test]
    fn balance_oversamples_minority_to_majority() {
        let balanced = bootstrap_balance(&pool_with_counts(100, 40), 7).unwrap();
        assert_eq!(balanced.class_counts(), (100, 100));
        // Resampled items are copies of existing minority values.
        let originals = pool_with_counts(100, 40);
        let known = originals.distinct_values(ClassLabel::Intrusion);
        for s in balanced.of_class(ClassLabel::Intrusion) {
            assert!(known.contains(s.seq.as_slice()));
        }
    }

    #[test]
    fn balance_leaves_balanced_pool_unchanged() {
        let pool = pool_with_counts(7, 7);
        let balanced = bootstrap_balance(&pool, 7).unwrap();
        assert_eq!(balanced, pool);
    }

    #[test]
    fn balance_is_deterministic() {
        let pool = pool_with_counts(9, 4);
        assert_eq!(
            bootstrap_balance(&pool, 123).unwrap(),
            bootstrap_balance(&pool, 123).unwrap()
        );
    }

    #[test]
    fn balance_rejects_empty_class() {
        let err = bootstrap_balance(&pool_with_counts(5, 0), 1).unwrap_err();
        assert!(matches!(err, PreprocessError::EmptyClass(_)), "{err}");
    }

    #[test]
    fn split_is_stratified_with_floor_cut() {
        let split = split_train_test(&pool_with_counts(5, 5), 0.7, 9).unwrap();
        assert_eq!(split.train.len(), 6);
        assert_eq!(split.test.len(), 4);
        let train_normal = split
            .train
            .iter()
            .filter(|s| s.label == ClassLabel::Normal)
            .count();
        assert_eq!(train_normal, 3);
    }

    #[test]
    fn split_of_balanced_14000_gives_9800_train() {
        let split = split_train_test(&pool_with_counts(7000, 7000), 0.7, 1).unwrap();
        assert_eq!(split.train.len(), 9800);
        assert_eq!(split.test.len(), 4200);
    }

    #[test]
    fn split_is_deterministic_and_partitions_pool() {
        let pool = pool_with_counts(13, 8);
        let a = split_train_test(&pool, 0.7, 5).unwrap();
        let b = split_train_test(&pool, 0.7, 5).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.train.len() + a.test.len(), pool.len());
        let mut recombined: Vec<_> = a.train.iter().chain(a.test.iter()).cloned().collect();
        let mut expected = pool.sequences.clone();
        recombined.sort_by(|x, y| x.seq.cmp(&y.seq).then(x.label.cmp(&y.label)));
        expected.sort_by(|x, y| x.seq.cmp(&y.seq).then(x.label.cmp(&y.label)));
        assert_eq!(recombined, expected);
    }

    #[test]
    fn split_rejects_tiny_class() {
        let err = split_train_test(&pool_with_counts(5, 1), 0.7, 1).unwrap_err();
        assert!(
            matches!(err, PreprocessError::CannotStratify { .. }),
            "{err}"
        );
    }

    fn dataset(normal: Vec<Trace>, intrusion: Vec<Trace>) -> RawDataset {
        RawDataset {
            manifest: DatasetManifest::in_memory("t", DatasetFormat::Adfa),
            normal_traces: normal,
            intrusion_traces: intrusion,
            pid_streams: Vec::new(),
            dropped_empty: DroppedFiles::default(),
        }
    }

    #[test]
    fn pipeline_with_disjoint_signatures_removes_nothing() {
        let ds = dataset(
            vec![Trace::new("n", vec![1, 2, 3, 1, 2, 3, 1, 2])],
            vec![Trace::new("i", vec![9, 8, 7, 9, 8, 7, 9, 8])],
        );
        let cfg = PipelineConfig {
            n: 3,
            ..PipelineConfig::default()
        };
        let out = run_pipeline(&ds, &cfg).unwrap();
        assert_eq!(out.processed.sequences, out.original.sequences);
        assert_eq!(out.processed.provenance, Provenance::Processed);
        assert_eq!(out.stats.dedup_removed_normal, 0);
    }

    #[test]
    fn pipeline_without_dedup_keeps_original_provenance() {
        let ds = dataset(
            vec![Trace::new("n", vec![1, 2, 3, 4, 5, 6, 7, 8])],
            vec![Trace::new("i", vec![1, 2, 3, 4, 5, 6, 7, 9])],
        );
        let cfg = PipelineConfig {
            dedup: false,
            ..PipelineConfig::default()
        };
        let out = run_pipeline(&ds, &cfg).unwrap();
        assert_eq!(out.processed.provenance, Provenance::Original);
        assert_eq!(out.processed.len(), out.original.len());
    }

    #[test]
    fn pipeline_identical_classes_fails_in_balance() {
        let t = Trace::new("x", vec![1, 2, 3, 4, 5, 6, 7]);
        let ds = dataset(vec![t.clone()], vec![t]);
        let err = run_pipeline(&ds, &PipelineConfig::default()).unwrap_err();
        assert!(matches!(err, PreprocessError::EmptyClass(_)), "{err}");
    }

    #[test]
    fn pipeline_counts_short_traces_and_reports_overlap() {
        let ds = dataset(
            vec![
                Trace::new("n1", vec![1, 2, 3, 1, 2, 3, 1, 2, 3, 1]),
                Trace::new("tiny", vec![1, 2]),
            ],
            vec![Trace::new("i1", vec![7, 8, 9, 7, 8, 9, 7, 8, 9, 7])],
        );
        let cfg = PipelineConfig {
            n: 3,
            seed: 11,
            ..PipelineConfig::default()
        };
        let out = run_pipeline(&ds, &cfg).unwrap();
        assert_eq!(out.stats.short_traces_normal, 1);
        assert_eq!(out.stats.short_traces_intrusion, 0);
        // Cyclic traces repeat values, so train/test share values.
        assert!(out.stats.train_test_value_overlap > 0.0);
    }

    #[test]
    fn pipeline_is_deterministic() {
        let ds = dataset(
            vec![
                Trace::new("n1", vec![1, 2, 3, 4, 5, 6, 7, 8, 9, 10]),
                Trace::new("n2", vec![2, 4, 6, 8, 10, 12, 14, 16]),
            ],
            vec![
                Trace::new("i1", vec![21, 22, 23, 24, 25, 26, 27]),
                Trace::new("i2", vec![31, 32, 33, 34, 35, 36, 37, 38]),
            ],
        );
        let cfg = PipelineConfig::default();
        let a = run_pipeline(&ds, &cfg).unwrap();
        let b = run_pipeline(&ds, &cfg).unwrap();
        assert_eq!(a.split, b.split);
        assert_eq!(a.stats, b.stats);
    }
}
