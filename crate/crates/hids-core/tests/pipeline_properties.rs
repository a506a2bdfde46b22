//! Randomized invariants for the cleaning pipeline: tokenization counts,
//! cross-class de-duplication, bootstrap balancing, stratified splitting,
//! and end-to-end determinism.

use std::collections::{HashMap, HashSet};

use hids_core::corpus::{DatasetFormat, DatasetManifest, RawDataset, Trace};
use hids_core::preprocess::{
    bootstrap_balance, dedup_cross_class, run_pipeline, split_train_test, tokenize_ngrams,
    ClassLabel, LabeledSequence, PipelineConfig, Provenance, Sequence, SequencePool,
};
use proptest::prelude::*;

fn multiset<'a, I: IntoIterator<Item = &'a Sequence>>(items: I) -> HashMap<&'a [u32], usize> {
    let mut m = HashMap::new();
    for s in items {
        *m.entry(s.as_slice()).or_default() += 1;
    }
    m
}

fn labeled_multiset(items: &[LabeledSequence]) -> HashMap<(&[u32], ClassLabel), usize> {
    let mut m = HashMap::new();
    for s in items {
        *m.entry((s.seq.as_slice(), s.label)).or_default() += 1;
    }
    m
}

/// Short grams over a tiny vocabulary, so cross-class collisions are common.
fn gram() -> impl Strategy<Value = Sequence> {
    prop::collection::vec(0u32..6, 3)
}

fn gram_class(max: usize) -> impl Strategy<Value = Vec<Sequence>> {
    prop::collection::vec(gram(), 1..max)
}

fn pool(normal: &[Sequence], intrusion: &[Sequence]) -> SequencePool {
    let mut sequences: Vec<LabeledSequence> = normal
        .iter()
        .map(|s| LabeledSequence::new(s.clone(), ClassLabel::Normal))
        .collect();
    sequences.extend(
        intrusion
            .iter()
            .map(|s| LabeledSequence::new(s.clone(), ClassLabel::Intrusion)),
    );
    SequencePool::new(sequences, Provenance::Original)
}

proptest! {
    #[test]
    fn gram_count_matches_closed_form(
        events in prop::collection::vec(0u32..50, 0..60),
        n in 1usize..8,
        stride in 1usize..8,
    ) {
        prop_assume!(stride <= n);
        let trace = Trace::new("t", events.clone());
        let grams = tokenize_ngrams(&trace, n, stride);
        if events.len() < n {
            prop_assert!(grams.is_empty());
        } else {
            prop_assert_eq!(grams.len(), (events.len() - n) / stride + 1);
            for (i, g) in grams.iter().enumerate() {
                prop_assert_eq!(&g[..], &events[i * stride..i * stride + n]);
            }
        }
    }

    #[test]
    fn dedup_is_disjoint_idempotent_and_invents_nothing(
        normal in gram_class(40),
        intrusion in gram_class(40),
    ) {
        let (n1, i1) = dedup_cross_class(&normal, &intrusion);

        let n_set: HashSet<&[u32]> = n1.iter().map(|s| s.as_slice()).collect();
        let i_set: HashSet<&[u32]> = i1.iter().map(|s| s.as_slice()).collect();
        prop_assert!(n_set.is_disjoint(&i_set));

        let (n2, i2) = dedup_cross_class(&n1, &i1);
        prop_assert_eq!(&n1, &n2);
        prop_assert_eq!(&i1, &i2);

        for (before, after) in [(&normal, &n1), (&intrusion, &i1)] {
            let pre = multiset(before);
            for (value, count) in multiset(after) {
                prop_assert!(pre.get(value).is_some_and(|&c| c >= count));
            }
        }
    }

    #[test]
    fn bootstrap_equalizes_counts_and_keeps_originals(
        normal in gram_class(50),
        intrusion in gram_class(50),
        seed in any::<u64>(),
    ) {
        let input = pool(&normal, &intrusion);
        let balanced = bootstrap_balance(&input, seed).unwrap();
        let (n, i) = balanced.class_counts();
        prop_assert_eq!(n, i);
        prop_assert_eq!(n.max(i), normal.len().max(intrusion.len()));

        // Top-up: the original pool is a prefix; every appended item is a
        // copy of an existing minority sequence.
        prop_assert_eq!(&balanced.sequences[..input.sequences.len()], &input.sequences[..]);
        let minority = if normal.len() <= intrusion.len() {
            ClassLabel::Normal
        } else {
            ClassLabel::Intrusion
        };
        let originals: HashSet<&[u32]> = input
            .of_class(minority)
            .map(|s| s.seq.as_slice())
            .collect();
        for item in &balanced.sequences[input.sequences.len()..] {
            prop_assert_eq!(item.label, minority);
            prop_assert!(originals.contains(item.seq.as_slice()));
        }
    }

    #[test]
    fn split_partitions_the_pool_stratified(
        normal in prop::collection::vec(gram(), 2..50),
        intrusion in prop::collection::vec(gram(), 2..50),
        seed in any::<u64>(),
        ratio_pct in 10u32..90,
    ) {
        let ratio = f64::from(ratio_pct) / 100.0;
        let input = pool(&normal, &intrusion);
        let split = split_train_test(&input, ratio, seed).unwrap();

        let mut combined = labeled_multiset(&split.train);
        for ((value, label), count) in labeled_multiset(&split.test) {
            *combined.entry((value, label)).or_default() += count;
        }
        prop_assert_eq!(combined, labeled_multiset(&input.sequences));

        let train_normal = split.train.iter().filter(|s| s.label == ClassLabel::Normal).count();
        let train_intrusion = split.train.len() - train_normal;
        prop_assert_eq!(train_normal, (ratio * normal.len() as f64).floor() as usize);
        prop_assert_eq!(train_intrusion, (ratio * intrusion.len() as f64).floor() as usize);
    }
}

/// Traces with partially overlapping vocabularies so dedup usually removes
/// something but rarely everything.
fn random_dataset() -> impl Strategy<Value = RawDataset> {
    let normal_traces = prop::collection::vec(prop::collection::vec(0u32..6, 3..14), 2..12);
    let intrusion_traces = prop::collection::vec(prop::collection::vec(3u32..9, 3..14), 2..12);
    (normal_traces, intrusion_traces).prop_map(|(normal, intrusion)| RawDataset {
        manifest: DatasetManifest::in_memory("prop", DatasetFormat::Adfa),
        normal_traces: normal
            .into_iter()
            .enumerate()
            .map(|(i, events)| Trace::new(format!("n{i}"), events))
            .collect(),
        intrusion_traces: intrusion
            .into_iter()
            .enumerate()
            .map(|(i, events)| Trace::new(format!("i{i}"), events))
            .collect(),
        pid_streams: Vec::new(),
        dropped_empty: Default::default(),
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn pipeline_runs_are_deterministic(ds in random_dataset(), seed in any::<u64>()) {
        let cfg = PipelineConfig { n: 3, seed, ..PipelineConfig::default() };
        let a = run_pipeline(&ds, &cfg);
        let b = run_pipeline(&ds, &cfg);
        match (a, b) {
            (Ok(a), Ok(b)) => {
                prop_assert!((0.0..=1.0).contains(&a.stats.train_test_value_overlap));
                // The processed pool's class values never overlap.
                prop_assert!(a.processed.check_disjoint());
                prop_assert_eq!(a.split.train, b.split.train);
                prop_assert_eq!(a.split.test, b.split.test);
                prop_assert_eq!(a.original.sequences, b.original.sequences);
                prop_assert_eq!(a.processed.sequences, b.processed.sequences);
                prop_assert_eq!(a.stats, b.stats);
            }
            (Err(a), Err(b)) => prop_assert_eq!(a.to_string(), b.to_string()),
            (a, b) => prop_assert!(false, "one run failed: {a:?} vs {b:?}"),
        }
    }
}
