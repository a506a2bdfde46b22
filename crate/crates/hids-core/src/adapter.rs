//! Subprocess bridge for external classifiers speaking a line-delimited
//! protocol over stdin/stdout, so models written in any language can be
//! evaluated exactly like the native ones.
//!
//! # Wire protocol (version 1)
//!
//! All records are newline-delimited UTF-8. The parent writes to the child's
//! standard input and reads scores from its standard output:
//!
//! ```text
//! parent → child   HIDSA 1 <n>                       header: version, gram length
//! child  → parent  OK HIDSA 1                        handshake acknowledgement
//! parent → child   TRAIN <m>
//! parent → child   <label>\t<s1> <s2> … <sn>         m times; label is 0 or 1
//! parent → child   TEST <k>
//! parent → child   <s1> <s2> … <sn>                  k times
//! parent → child   END                               then stdin is closed
//! child  → parent  <score>                           k lines, real number,
//!                                                    higher = more intrusion-like
//! ```
//!
//! Response line i corresponds to test sequence i; the adapter never
//! reorders. Score lines may be streamed at any time after the handshake.

use std::io::{BufRead, BufReader, Read, Write};
use std::process::{Child, Command, Stdio};
use std::sync::mpsc::{self, RecvTimeoutError};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use crate::metrics::{evaluate_scores, MetricsError, MetricsReport};
use crate::preprocess::{ClassLabel, LabeledSequence, PreparedSplit, Provenance, Sequence};

pub const PROTOCOL_NAME: &str = "HIDSA";
pub const PROTOCOL_VERSION: u32 = 1;

/// Decision threshold applied to external scores, matching the native
/// probabilistic models.
pub const EXTERNAL_THRESHOLD: f64 = 0.5;

#[derive(Debug, thiserror::Error)]
pub enum AdapterError {
    #[error("invalid external model spec: {0}")]
    InvalidSpec(String),
    #[error("failed to start external model `{command}`: {source}")]
    Spawn {
        command: String,
        #[source]
        source: std::io::Error,
    },
    #[error(
        "handshake failed: expected `OK {PROTOCOL_NAME} {PROTOCOL_VERSION}`, got {got:?}{stderr}"
    )]
    Handshake { got: Option<String>, stderr: String },
    #[error("malformed score on response line {line}: {content:?}")]
    MalformedScore { line: usize, content: String },
    #[error("external model returned {got} of {expected} scores{stderr}")]
    CountMismatch {
        expected: usize,
        got: usize,
        stderr: String,
    },
    #[error("external model exceeded the {timeout:?} timeout{stderr}")]
    Timeout { timeout: Duration, stderr: String },
    #[error("i/o error talking to external model: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

/// How to run one external model.
#[derive(Debug, Clone, PartialEq)]
pub struct ExternalModelSpec {
    /// Program plus arguments, split on whitespace (no shell quoting).
    pub command: String,
    /// Wall-clock budget for the whole exchange.
    pub timeout: Duration,
    /// Model name used in reports.
    pub name: String,
}

impl ExternalModelSpec {
    pub fn new(command: impl Into<String>, timeout: Duration, name: impl Into<String>) -> Self {
        Self {
            command: command.into(),
            timeout,
            name: name.into(),
        }
    }

    pub fn validate(&self) -> Result<(), AdapterError> {
        if self.command.split_whitespace().next().is_none() {
            return Err(AdapterError::InvalidSpec("command is empty".into()));
        }
        if self.timeout.is_zero() {
            return Err(AdapterError::InvalidSpec("timeout must be positive".into()));
        }
        Ok(())
    }
}

fn stderr_note(text: &str) -> String {
    let trimmed = text.trim();
    if trimmed.is_empty() {
        String::new()
    } else {
        format!("; child stderr: {trimmed}")
    }
}

fn fmt_sequence(out: &mut String, seq: &[u32]) {
    for (i, v) in seq.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        out.push_str(&v.to_string());
    }
    out.push('\n');
}

/// Collects child stderr on a thread into a shared buffer, so a snapshot is
/// available even if some orphaned grandchild keeps the pipe open.
struct StderrCollector {
    buf: Arc<Mutex<String>>,
    handle: thread::JoinHandle<()>,
}

impl StderrCollector {
    fn spawn(mut stream: impl Read + Send + 'static) -> Self {
        let buf = Arc::new(Mutex::new(String::new()));
        let sink = Arc::clone(&buf);
        let handle = thread::spawn(move || {
            let mut chunk = [0u8; 4096];
            while let Ok(n) = stream.read(&mut chunk) {
                if n == 0 {
                    break;
                }
                let text = String::from_utf8_lossy(&chunk[..n]).into_owned();
                sink.lock().expect("stderr buffer lock").push_str(&text);
            }
        });
        Self { buf, handle }
    }

    /// Kills and reaps the child, then returns whatever stderr has arrived.
    /// Waits briefly for the reader to drain; if something else still holds
    /// the pipe open, the snapshot so far is returned instead of blocking.
    fn finish(self, child: &mut Child) -> String {
        let _ = child.kill();
        let _ = child.wait();
        let grace = Instant::now() + Duration::from_millis(500);
        while !self.handle.is_finished() && Instant::now() < grace {
            thread::sleep(Duration::from_millis(2));
        }
        if self.handle.is_finished() {
            let _ = self.handle.join();
        }
        let text = self.buf.lock().expect("stderr buffer lock").clone();
        text
    }
}

enum Recv {
    Line(String),
    Closed,
    TimedOut,
}

fn recv_line(rx: &mpsc::Receiver<String>, deadline: Instant) -> Recv {
    match rx.recv_timeout(deadline.saturating_duration_since(Instant::now())) {
        Ok(line) => Recv::Line(line),
        Err(RecvTimeoutError::Disconnected) => Recv::Closed,
        Err(RecvTimeoutError::Timeout) => Recv::TimedOut,
    }
}

/// Runs one full protocol exchange and returns the k test scores in order.
///
/// The transcript is written from a dedicated thread while scores are read
/// concurrently, so a child may stream responses without deadlocking either
/// side. On timeout the child is killed and its captured stderr is attached
/// to the error.
pub fn run_protocol(
    spec: &ExternalModelSpec,
    train: &[LabeledSequence],
    test: &[Sequence],
) -> Result<Vec<f64>, AdapterError> {
    spec.validate()?;
    let n = train
        .first()
        .map(|s| s.seq.len())
        .or_else(|| test.first().map(Vec::len))
        .ok_or_else(|| AdapterError::InvalidSpec("no sequences to send".into()))?;
    if train.iter().any(|s| s.seq.len() != n) || test.iter().any(|s| s.len() != n) {
        return Err(AdapterError::InvalidSpec(
            "sequences have differing lengths".into(),
        ));
    }

    let mut parts = spec.command.split_whitespace();
    let program = parts.next().expect("validated non-empty command");
    let mut child = Command::new(program)
        .args(parts)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(|source| AdapterError::Spawn {
            command: spec.command.clone(),
            source,
        })?;
    let mut stdin = child.stdin.take().expect("stdin piped");
    let stdout = child.stdout.take().expect("stdout piped");
    let stderr = StderrCollector::spawn(child.stderr.take().expect("stderr piped"));

    let (tx, rx) = mpsc::channel::<String>();
    let reader = thread::spawn(move || {
        for line in BufReader::new(stdout).lines() {
            match line {
                Ok(l) => {
                    if tx.send(l).is_err() {
                        break;
                    }
                }
                Err(_) => break,
            }
        }
    });

    let deadline = Instant::now() + spec.timeout;

    // Handshake first: nothing of size is written until the child answers.
    writeln!(stdin, "{PROTOCOL_NAME} {PROTOCOL_VERSION} {n}")?;
    stdin.flush()?;
    let expected_ack = format!("OK {PROTOCOL_NAME} {PROTOCOL_VERSION}");
    match recv_line(&rx, deadline) {
        Recv::Line(line) if line.trim() == expected_ack => {}
        Recv::Line(line) => {
            let stderr = stderr.finish(&mut child);
            let _ = reader.join();
            return Err(AdapterError::Handshake {
                got: Some(line),
                stderr: stderr_note(&stderr),
            });
        }
        Recv::Closed => {
            let stderr = stderr.finish(&mut child);
            let _ = reader.join();
            return Err(AdapterError::Handshake {
                got: None,
                stderr: stderr_note(&stderr),
            });
        }
        Recv::TimedOut => {
            let stderr = stderr.finish(&mut child);
            let _ = reader.join();
            return Err(AdapterError::Timeout {
                timeout: spec.timeout,
                stderr: stderr_note(&stderr),
            });
        }
    }

    // Build the full transcript up front and write it from a helper thread;
    // this cannot deadlock even if the child stops reading, because the
    // parent never blocks on the write side.
    let mut payload = String::new();
    payload.push_str(&format!("TRAIN {}\n", train.len()));
    for item in train {
        payload.push_str(&format!("{}\t", item.label.as_u8()));
        fmt_sequence(&mut payload, &item.seq);
    }
    payload.push_str(&format!("TEST {}\n", test.len()));
    for seq in test {
        fmt_sequence(&mut payload, seq);
    }
    payload.push_str("END\n");
    let writer = thread::spawn(move || {
        // A child that exits early breaks the pipe; that surfaces on the
        // read side as missing scores, so the write error is ignored here.
        let _ = stdin.write_all(payload.as_bytes());
        // stdin drops here, closing the pipe.
    });

    let mut scores = Vec::with_capacity(test.len());
    for i in 0..test.len() {
        match recv_line(&rx, deadline) {
            Recv::Line(line) => {
                let trimmed = line.trim();
                match trimmed.parse::<f64>() {
                    Ok(v) => scores.push(v),
                    Err(_) => {
                        let _ = stderr.finish(&mut child);
                        let _ = writer.join();
                        let _ = reader.join();
                        return Err(AdapterError::MalformedScore {
                            line: i + 1,
                            content: trimmed.to_string(),
                        });
                    }
                }
            }
            Recv::Closed => {
                let stderr = stderr.finish(&mut child);
                let _ = writer.join();
                let _ = reader.join();
                return Err(AdapterError::CountMismatch {
                    expected: test.len(),
                    got: i,
                    stderr: stderr_note(&stderr),
                });
            }
            Recv::TimedOut => {
                let stderr = stderr.finish(&mut child);
                let _ = writer.join();
                let _ = reader.join();
                return Err(AdapterError::Timeout {
                    timeout: spec.timeout,
                    stderr: stderr_note(&stderr),
                });
            }
        }
    }

    // All scores received; reap the child within the remaining budget.
    loop {
        match child.try_wait()? {
            Some(_) => break,
            None if Instant::now() >= deadline => break,
            None => thread::sleep(Duration::from_millis(2)),
        }
    }
    let _ = stderr.finish(&mut child);
    let _ = writer.join();
    let _ = reader.join();
    Ok(scores)
}

/// Trains and evaluates an external model on a prepared split, producing the
/// same report as a native model. Deterministic whenever the child is.
pub fn evaluate_external(
    spec: &ExternalModelSpec,
    split: &PreparedSplit,
    dataset: &str,
    provenance: Provenance,
) -> Result<MetricsReport, AdapterError> {
    let test_seqs: Vec<Sequence> = split.test.iter().map(|s| s.seq.clone()).collect();
    let scores = run_protocol(spec, &split.train, &test_seqs)?;
    let labels: Vec<ClassLabel> = split.test.iter().map(|s| s.label).collect();
    Ok(evaluate_scores(
        &labels,
        &scores,
        EXTERNAL_THRESHOLD,
        &spec.name,
        dataset,
        provenance,
    )?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;
    use std::path::Path;

    fn write_py(dir: &Path, body: &str) -> String {
        let path = dir.join("child.py");
        fs::write(&path, body).unwrap();
        format!("python3 {}", path.display())
    }

    /// Scores 0.9 when the test sequence's first id appeared first in an
    /// intrusion training sequence, else 0.1.
    const LOOKUP_PY: &str = r#"
import sys

sys.stdin.readline()
print("OK HIDSA 1", flush=True)
bad = set()
mode = 0
for line in sys.stdin:
    line = line.strip()
    if line.startswith("TRAIN"):
        mode = 1
    elif line.startswith("TEST"):
        mode = 2
    elif line == "END":
        break
    elif mode == 1:
        label, seq = line.split("\t")
        if label == "1":
            bad.add(seq.split()[0])
    elif mode == 2:
        print("0.9" if line.split()[0] in bad else "0.1", flush=True)
"#;

    fn spec(command: String) -> ExternalModelSpec {
        ExternalModelSpec::new(command, Duration::from_secs(5), "ext")
    }

    fn labeled(first: u32, label: ClassLabel) -> LabeledSequence {
        LabeledSequence::new(vec![first, 2, 3, 4, 5, 6], label)
    }

    fn disjoint_split() -> PreparedSplit {
        let train = vec![
            labeled(1, ClassLabel::Normal),
            labeled(9, ClassLabel::Intrusion),
            labeled(1, ClassLabel::Normal),
            labeled(9, ClassLabel::Intrusion),
        ];
        let test = vec![
            labeled(1, ClassLabel::Normal),
            labeled(9, ClassLabel::Intrusion),
            labeled(1, ClassLabel::Normal),
            labeled(9, ClassLabel::Intrusion),
        ];
        PreparedSplit {
            train,
            test,
            seed: 0,
            ratio: 0.5,
        }
    }

    #[test]
    fn lookup_child_scores_in_order_and_reports_perfectly() {
        let dir = tempfile::tempdir().unwrap();
        let spec = spec(write_py(dir.path(), LOOKUP_PY));
        let split = disjoint_split();
        let test_seqs: Vec<Sequence> = split.test.iter().map(|s| s.seq.clone()).collect();
        let scores = run_protocol(&spec, &split.train, &test_seqs).unwrap();
        assert_eq!(scores, vec![0.1, 0.9, 0.1, 0.9]);

        let report = evaluate_external(&spec, &split, "d", Provenance::Processed).unwrap();
        assert_eq!(report.recall, 1.0);
        assert_eq!(report.fpr, 0.0);
        assert_eq!(report.model, "ext");
    }

    #[test]
    fn bad_handshake_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let cmd = write_py(dir.path(), "print(\"NOPE\", flush=True)\n");
        let err = run_protocol(
            &spec(cmd),
            &disjoint_split().train,
            &[vec![1, 2, 3, 4, 5, 6]],
        )
        .unwrap_err();
        match err {
            AdapterError::Handshake { got, .. } => assert_eq!(got.as_deref(), Some("NOPE")),
            other => panic!("expected handshake error, got {other}"),
        }
    }

    #[test]
    fn non_numeric_score_names_the_line() {
        let dir = tempfile::tempdir().unwrap();
        let garbage = LOOKUP_PY.replace(
            "\"0.9\" if line.split()[0] in bad else \"0.1\"",
            "\"banana\"",
        );
        let cmd = write_py(dir.path(), &garbage);
        let split = disjoint_split();
        let seqs: Vec<Sequence> = split.test.iter().map(|s| s.seq.clone()).collect();
        let err = run_protocol(&spec(cmd), &split.train, &seqs).unwrap_err();
        match err {
            AdapterError::MalformedScore { line, content } => {
                assert_eq!(line, 1);
                assert_eq!(content, "banana");
            }
            other => panic!("expected malformed score, got {other}"),
        }
    }

    #[test]
    fn child_exiting_mid_test_yields_count_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        // Answers exactly one test line, then quits.
        let truncated = LOOKUP_PY.replace(
            "print(\"0.9\" if line.split()[0] in bad else \"0.1\", flush=True)",
            "print(\"0.5\", flush=True)\n        sys.exit(0)",
        );
        let cmd = write_py(dir.path(), &truncated);
        let split = disjoint_split();
        let seqs: Vec<Sequence> = split.test.iter().map(|s| s.seq.clone()).collect();
        let err = run_protocol(&spec(cmd), &split.train, &seqs).unwrap_err();
        match err {
            AdapterError::CountMismatch { expected, got, .. } => {
                assert_eq!((expected, got), (4, 1));
            }
            other => panic!("expected count mismatch, got {other}"),
        }
    }

    #[test]
    fn silent_child_times_out_with_captured_stderr() {
        let dir = tempfile::tempdir().unwrap();
        let cmd = write_py(
            dir.path(),
            "import sys, time\nsys.stderr.write(\"boo\\n\")\nsys.stderr.flush()\ntime.sleep(30)\n",
        );
        let spec = ExternalModelSpec::new(cmd, Duration::from_millis(300), "stall");
        let start = Instant::now();
        let err =
            run_protocol(&spec, &disjoint_split().train, &[vec![1, 2, 3, 4, 5, 6]]).unwrap_err();
        assert!(start.elapsed() < Duration::from_secs(5));
        match err {
            AdapterError::Timeout { stderr, .. } => assert!(stderr.contains("boo"), "{stderr}"),
            other => panic!("expected timeout, got {other}"),
        }
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let empty = ExternalModelSpec::new("  ", Duration::from_secs(1), "x");
        assert!(empty.validate().is_err());
        let zero = ExternalModelSpec::new("cat", Duration::ZERO, "x");
        assert!(zero.validate().is_err());
        let missing =
            ExternalModelSpec::new("/nonexistent/binary-xyz", Duration::from_secs(1), "x");
        let err = run_protocol(&missing, &disjoint_split().train, &[]).unwrap_err();
        assert!(matches!(err, AdapterError::Spawn { .. }), "{err}");
    }
}
