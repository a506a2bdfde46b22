//! Reference external model speaking the line protocol on stdin/stdout.
//!
//! It memorizes every training sequence value and scores a test sequence by
//! the intrusion fraction among its training occurrences; values never seen
//! in training score 0.5 (undecided). Deliberate protocol violations can be
//! triggered with `--misbehave=<mode>` so harness error paths are testable:
//!
//! - `bad-handshake`: reply with a wrong handshake line and exit
//! - `truncate`: emit only half of the expected score lines
//! - `garbage-score`: emit a non-numeric first score line
//!
//! Exchange (one line each unless counted):
//!
//! ```text
//! parent: HIDSA 1 <n>
//! child:  OK HIDSA 1
//! parent: TRAIN <m>  then m lines "<label>\t<s1> <s2> ... <sn>"
//! parent: TEST <k>   then k lines "<s1> <s2> ... <sn>"
//! parent: END
//! child:  k score lines, one per test sequence, higher = intrusion
//! ```

use std::collections::HashMap;
use std::io::{self, BufRead, Write};
use std::process::ExitCode;

#[derive(Clone, Copy, PartialEq, Eq)]
enum Misbehave {
    None,
    BadHandshake,
    Truncate,
    GarbageScore,
}

fn parse_args() -> Result<Misbehave, String> {
    let mut mode = Misbehave::None;
    for arg in std::env::args().skip(1) {
        match arg.strip_prefix("--misbehave=") {
            Some("bad-handshake") => mode = Misbehave::BadHandshake,
            Some("truncate") => mode = Misbehave::Truncate,
            Some("garbage-score") => mode = Misbehave::GarbageScore,
            Some(other) => {
                return Err(format!(
                    "unknown misbehave mode {other:?}; expected bad-handshake, truncate, or garbage-score"
                ))
            }
            None => return Err(format!("unknown argument {arg:?}")),
        }
    }
    Ok(mode)
}

fn read_line(lines: &mut impl Iterator<Item = io::Result<String>>) -> Result<String, String> {
    match lines.next() {
        Some(Ok(line)) => Ok(line),
        Some(Err(e)) => Err(format!("stdin read failed: {e}")),
        None => Err("stdin closed mid-protocol".to_string()),
    }
}

fn parse_count(line: &str, keyword: &str) -> Result<usize, String> {
    let mut parts = line.split_whitespace();
    if parts.next() != Some(keyword) {
        return Err(format!("expected \"{keyword} <count>\", got {line:?}"));
    }
    parts
        .next()
        .and_then(|c| c.parse().ok())
        .ok_or_else(|| format!("bad count in {line:?}"))
}

fn run(mode: Misbehave) -> Result<(), String> {
    let stdin = io::stdin();
    let mut lines = stdin.lock().lines();
    let stdout = io::stdout();
    let mut out = stdout.lock();

    let handshake = read_line(&mut lines)?;
    let mut parts = handshake.split_whitespace();
    let (magic, version) = (parts.next(), parts.next());
    if magic != Some("HIDSA") || version != Some("1") {
        return Err(format!("unsupported handshake {handshake:?}"));
    }
    if mode == Misbehave::BadHandshake {
        writeln!(out, "NOPE")
            .and_then(|()| out.flush())
            .map_err(|e| e.to_string())?;
        return Ok(());
    }
    writeln!(out, "OK HIDSA 1")
        .and_then(|()| out.flush())
        .map_err(|e| e.to_string())?;

    let m = parse_count(&read_line(&mut lines)?, "TRAIN")?;
    // Sequence value -> (normal occurrences, intrusion occurrences).
    let mut table: HashMap<String, (u64, u64)> = HashMap::new();
    for _ in 0..m {
        let line = read_line(&mut lines)?;
        let (label, seq) = line
            .split_once('\t')
            .ok_or_else(|| format!("bad TRAIN line {line:?}"))?;
        let entry = table.entry(seq.to_string()).or_insert((0, 0));
        match label {
            "0" => entry.0 += 1,
            "1" => entry.1 += 1,
            other => return Err(format!("bad label {other:?}")),
        }
    }

    let k = parse_count(&read_line(&mut lines)?, "TEST")?;
    let mut tests = Vec::with_capacity(k);
    for _ in 0..k {
        tests.push(read_line(&mut lines)?);
    }
    let end = read_line(&mut lines)?;
    if end != "END" {
        return Err(format!("expected END, got {end:?}"));
    }

    let emit = match mode {
        Misbehave::Truncate => k / 2,
        _ => k,
    };
    for (i, seq) in tests.iter().take(emit).enumerate() {
        if mode == Misbehave::GarbageScore && i == 0 {
            writeln!(out, "not-a-score").map_err(|e| e.to_string())?;
            continue;
        }
        let score = match table.get(seq) {
            Some(&(neg, pos)) => pos as f64 / (neg + pos) as f64,
            None => 0.5,
        };
        writeln!(out, "{score}").map_err(|e| e.to_string())?;
    }
    out.flush().map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let mode = match parse_args() {
        Ok(mode) => mode,
        Err(msg) => {
            eprintln!("hids-lookup-model: {msg}");
            return ExitCode::from(2);
        }
    };
    match run(mode) {
        Ok(()) => ExitCode::SUCCESS,
        Err(msg) => {
            eprintln!("hids-lookup-model: {msg}");
            ExitCode::FAILURE
        }
    }
}
