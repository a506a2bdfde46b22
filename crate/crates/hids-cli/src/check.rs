//! External-model conformance check: a fixed, fully deterministic exchange
//! over the line protocol with a verdict on protocol compliance.

use std::time::Duration;

use hids_core::adapter::{run_protocol, ExternalModelSpec, EXTERNAL_THRESHOLD};
use hids_core::metrics::evaluate_scores;
use hids_core::preprocess::{ClassLabel, LabeledSequence, PreparedSplit, Provenance, Sequence};

use crate::CliError;

/// Gram length of the conformance corpus.
pub const CHECK_GRAM_LEN: usize = 6;

/// Cyclic 6-grams over `base..base+10`: ten distinct values per class.
fn cycle_grams(base: u32) -> Vec<Sequence> {
    (0..10u32)
        .map(|start| {
            (0..CHECK_GRAM_LEN as u32)
                .map(|k| base + (start + k) % 10)
                .collect()
        })
        .collect()
}

/// A deterministic split with disjoint class signatures where every test
/// value also occurs in training: normal grams cycle through ids 0-9,
/// intrusion grams through ids 10-19. An exact-lookup model must reach
/// recall 1.0 and FPR 0.0 on it.
pub fn conformance_split() -> PreparedSplit {
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (base, label) in [(0u32, ClassLabel::Normal), (10u32, ClassLabel::Intrusion)] {
        for gram in cycle_grams(base) {
            // Two training copies, one test copy of every value.
            train.push(LabeledSequence::new(gram.clone(), label));
            train.push(LabeledSequence::new(gram.clone(), label));
            test.push(LabeledSequence::new(gram, label));
        }
    }
    PreparedSplit {
        train,
        test,
        seed: 0,
        ratio: 0.7,
    }
}

/// Outcome of one conformance exchange, ready for printing.
pub struct CheckReport {
    pub train_len: usize,
    pub test_len: usize,
    pub score_min: f64,
    pub score_max: f64,
    pub recall: f64,
    pub fpr: f64,
}

impl CheckReport {
    pub fn render(&self, command: &str) -> String {
        format!(
            "command: {command}\n\
             protocol: HIDSA v1\n\
             train: {} sequences, test: {}\n\
             scores: {}/{} parsed\n\
             score range: [{:.3}, {:.3}]\n\
             lookup accuracy (informational): recall {:.3}, fpr {:.3}\n\
             verdict: conforming\n",
            self.train_len,
            self.test_len,
            self.test_len,
            self.test_len,
            self.score_min,
            self.score_max,
            self.recall,
            self.fpr,
        )
    }
}

/// Runs the conformance exchange against `command`. Any protocol violation
/// (handshake, score count, score syntax, timeout) comes back as a failure
/// carrying the adapter error text.
pub fn adapter_check(command: &str, timeout: Duration) -> Result<CheckReport, CliError> {
    let spec = ExternalModelSpec::new(command, timeout, "conformance-check");
    let split = conformance_split();
    let test_seqs: Vec<Sequence> = split.test.iter().map(|s| s.seq.clone()).collect();
    let scores = run_protocol(&spec, &split.train, &test_seqs)
        .map_err(|e| CliError::Failure(format!("not conforming: {e}")))?;
    let labels: Vec<ClassLabel> = split.test.iter().map(|s| s.label).collect();
    let report = evaluate_scores(
        &labels,
        &scores,
        EXTERNAL_THRESHOLD,
        "conformance-check",
        "conformance",
        Provenance::Processed,
    )
    .map_err(|e| CliError::Failure(format!("not conforming: {e}")))?;
    let score_min = scores.iter().copied().fold(f64::INFINITY, f64::min);
    let score_max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(CheckReport {
        train_len: split.train.len(),
        test_len: split.test.len(),
        score_min,
        score_max,
        recall: report.recall,
        fpr: report.fpr,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conformance_corpus_is_disjoint_and_fully_covered() {
        let split = conformance_split();
        assert_eq!(split.train.len(), 40);
        assert_eq!(split.test.len(), 20);
        let normal: std::collections::HashSet<&[u32]> = split
            .train
            .iter()
            .filter(|s| s.label == ClassLabel::Normal)
            .map(|s| s.seq.as_slice())
            .collect();
        let intrusion: std::collections::HashSet<&[u32]> = split
            .train
            .iter()
            .filter(|s| s.label == ClassLabel::Intrusion)
            .map(|s| s.seq.as_slice())
            .collect();
        assert!(normal.is_disjoint(&intrusion), "class signatures overlap");
        for t in &split.test {
            let set = if t.label == ClassLabel::Normal {
                &normal
            } else {
                &intrusion
            };
            assert!(set.contains(t.seq.as_slice()), "test value unseen in train");
        }
    }
}
