//! Raw trace parsing and dataset assembly.
//!
//! Two on-disk trace formats are supported:
//!
//! - `unm`: one `PID SYSCALL` integer pair per line. Files may interleave
//!   records of concurrently running processes; loading groups them by PID.
//!   The MIT Live Lpr corpus uses this record format as well.
//! - `adfa`: whitespace-separated syscall numbers, one whole trace per file.
//!   No PIDs are present.
//!
//! Datasets are described by a TOML manifest listing per-class file paths
//! (relative to the manifest) plus free-form metadata.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::preprocess::PipelineConfig;

/// Syscall numbers admissible by default when no range is declared.
pub const DEFAULT_MAX_SYSCALL: u32 = 512;

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{file}: line {line}: {message}")]
    Parse {
        file: String,
        line: usize,
        message: String,
    },
    #[error("manifest {path}: {message}")]
    Manifest { path: PathBuf, message: String },
}

/// One `(pid, syscall)` event from a UNM-format file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SyscallRecord {
    pub pid: u32,
    pub syscall: u32,
}

/// An ordered syscall sequence from one process. `events` preserves file
/// order exactly and is never reordered.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trace {
    pub source_id: String,
    pub events: Vec<u32>,
}

impl Trace {
    pub fn new(source_id: impl Into<String>, events: Vec<u32>) -> Self {
        Self {
            source_id: source_id.into(),
            events,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetFormat {
    Unm,
    Adfa,
}

impl fmt::Display for DatasetFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DatasetFormat::Unm => write!(f, "unm"),
            DatasetFormat::Adfa => write!(f, "adfa"),
        }
    }
}

/// Declares a dataset: name, trace format, per-class file lists, and free-form
/// metadata (year, duration, context, source, reputation, ...). Paths are kept
/// as written in the manifest and resolved against `base_dir` when loading.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetManifest {
    pub name: String,
    pub format: DatasetFormat,
    pub normal_paths: Vec<PathBuf>,
    pub intrusion_paths: Vec<PathBuf>,
    pub metadata: BTreeMap<String, String>,
    pub max_syscall: u32,
    pub pipeline: Option<PipelineConfig>,
    pub base_dir: PathBuf,
}

#[derive(Debug, Deserialize)]
struct ManifestFile {
    name: String,
    format: DatasetFormat,
    normal_paths: Vec<PathBuf>,
    intrusion_paths: Vec<PathBuf>,
    #[serde(default)]
    metadata: BTreeMap<String, String>,
    max_syscall: Option<u32>,
    pipeline: Option<PipelineConfig>,
}

impl DatasetManifest {
    /// Reads and validates a manifest TOML file. The two class path lists
    /// must be disjoint and non-empty.
    pub fn from_path(path: &Path) -> Result<Self, CorpusError> {
        let text = fs::read_to_string(path).map_err(|source| CorpusError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let parsed: ManifestFile = toml::from_str(&text).map_err(|e| CorpusError::Manifest {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        let base_dir = path
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_else(|| PathBuf::from("."));
        let manifest = Self {
            name: parsed.name,
            format: parsed.format,
            normal_paths: parsed.normal_paths,
            intrusion_paths: parsed.intrusion_paths,
            metadata: parsed.metadata,
            max_syscall: parsed.max_syscall.unwrap_or(DEFAULT_MAX_SYSCALL),
            pipeline: parsed.pipeline,
            base_dir,
        };
        manifest.validate(path)?;
        Ok(manifest)
    }

    fn validate(&self, path: &Path) -> Result<(), CorpusError> {
        if self.normal_paths.is_empty() || self.intrusion_paths.is_empty() {
            return Err(CorpusError::Manifest {
                path: path.to_path_buf(),
                message: "both normal_paths and intrusion_paths must be non-empty".into(),
            });
        }
        for p in &self.normal_paths {
            if self.intrusion_paths.contains(p) {
                return Err(CorpusError::Manifest {
                    path: path.to_path_buf(),
                    message: format!(
                        "path {} appears in both normal_paths and intrusion_paths",
                        p.display()
                    ),
                });
            }
        }
        Ok(())
    }

    /// Builds an in-memory manifest (used by the synthetic generator and tests).
    pub fn in_memory(name: impl Into<String>, format: DatasetFormat) -> Self {
        Self {
            name: name.into(),
            format,
            normal_paths: Vec::new(),
            intrusion_paths: Vec::new(),
            metadata: BTreeMap::new(),
            max_syscall: DEFAULT_MAX_SYSCALL,
            pipeline: None,
            base_dir: PathBuf::from("."),
        }
    }
}

/// The per-record PID column of one UNM file, kept for interleaving checks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PidStream {
    pub path: String,
    pub pids: Vec<u32>,
}

/// Counts of empty input files dropped during loading.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DroppedFiles {
    pub normal: usize,
    pub intrusion: usize,
}

/// A loaded, class-labeled dataset. Every trace is non-empty; empty files are
/// dropped and counted. For UNM data, each trace is one PID's event sequence
/// and `pid_streams` retains the raw per-file PID columns.
#[derive(Debug, Clone)]
pub struct RawDataset {
    pub manifest: DatasetManifest,
    pub normal_traces: Vec<Trace>,
    pub intrusion_traces: Vec<Trace>,
    pub pid_streams: Vec<PidStream>,
    pub dropped_empty: DroppedFiles,
}

/// Parses UNM-format text: one `pid syscall` pair per non-blank line, in file
/// order. Blank lines are skipped; any other malformed line is an error
/// carrying its 1-based line number.
pub fn parse_unm_trace(text: &str) -> Result<Vec<SyscallRecord>, CorpusError> {
    parse_unm_named(text, "<string>")
}

fn parse_unm_named(text: &str, file: &str) -> Result<Vec<SyscallRecord>, CorpusError> {
    let mut records = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut tokens = line.split_whitespace();
        let pid_tok = tokens.next();
        let sys_tok = tokens.next();
        let extra = tokens.next();
        let (pid_tok, sys_tok) = match (pid_tok, sys_tok, extra) {
            (Some(p), Some(s), None) => (p, s),
            _ => {
                return Err(CorpusError::Parse {
                    file: file.to_string(),
                    line: idx + 1,
                    message: format!("expected 'PID SYSCALL', got {line:?}"),
                })
            }
        };
        let parse = |tok: &str, what: &str| {
            tok.parse::<u32>().map_err(|_| CorpusError::Parse {
                file: file.to_string(),
                line: idx + 1,
                message: format!("{what} {tok:?} is not a non-negative integer"),
            })
        };
        records.push(SyscallRecord {
            pid: parse(pid_tok, "pid")?,
            syscall: parse(sys_tok, "syscall")?,
        });
    }
    Ok(records)
}

/// Parses ADFA-format text: whitespace-separated syscall numbers, one whole
/// trace per file. Errors carry the 1-based token position.
pub fn parse_adfa_trace(text: &str) -> Result<Trace, CorpusError> {
    parse_adfa_named(text, "<string>")
}

fn parse_adfa_named(text: &str, file: &str) -> Result<Trace, CorpusError> {
    let mut events = Vec::new();
    for (pos, tok) in text.split_whitespace().enumerate() {
        let value = tok.parse::<u32>().map_err(|_| CorpusError::Parse {
            file: file.to_string(),
            line: pos + 1,
            message: format!(
                "token {pos} {tok:?} is not a non-negative syscall number",
                pos = pos + 1
            ),
        })?;
        events.push(value);
    }
    Ok(Trace::new(file, events))
}

/// Renders UNM records back to their text format.
pub fn format_unm(records: &[SyscallRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&format!("{} {}\n", r.pid, r.syscall));
    }
    out
}

/// Renders an ADFA trace back to its text format.
pub fn format_adfa(trace: &Trace) -> String {
    let mut out = trace
        .events
        .iter()
        .map(u32::to_string)
        .collect::<Vec<_>>()
        .join(" ");
    out.push('\n');
    out
}

/// Groups UNM records into one trace per distinct PID. Within each trace,
/// events keep original record order; traces are ordered by first appearance
/// of their PID. `source` names the file the records came from.
pub fn group_by_pid(source: &str, records: &[SyscallRecord]) -> Vec<Trace> {
    let mut order: Vec<u32> = Vec::new();
    let mut by_pid: BTreeMap<u32, Vec<u32>> = BTreeMap::new();
    for r in records {
        let entry = by_pid.entry(r.pid).or_insert_with(|| {
            order.push(r.pid);
            Vec::new()
        });
        entry.push(r.syscall);
    }
    order
        .into_iter()
        .map(|pid| Trace::new(format!("{source}#{pid}"), by_pid.remove(&pid).unwrap()))
        .collect()
}

/// Loads every file listed in the manifest. Paths are resolved against the
/// manifest directory and loaded in lexicographic order so the result is
/// deterministic. Empty files are dropped and counted, never errors.
pub fn load_dataset(manifest: &DatasetManifest) -> Result<RawDataset, CorpusError> {
    let mut pid_streams = Vec::new();
    let mut dropped = DroppedFiles::default();

    let load_class = |paths: &[PathBuf],
                      dropped: &mut usize,
                      pid_streams: &mut Vec<PidStream>|
     -> Result<Vec<Trace>, CorpusError> {
        let mut sorted: Vec<&PathBuf> = paths.iter().collect();
        sorted.sort();
        let mut traces = Vec::new();
        for rel in sorted {
            let path = manifest.base_dir.join(rel);
            let text = fs::read_to_string(&path).map_err(|source| CorpusError::Io {
                path: path.clone(),
                source,
            })?;
            let display = rel.display().to_string();
            match manifest.format {
                DatasetFormat::Unm => {
                    let records = parse_unm_named(&text, &display)?;
                    if records.is_empty() {
                        *dropped += 1;
                        continue;
                    }
                    pid_streams.push(PidStream {
                        path: display.clone(),
                        pids: records.iter().map(|r| r.pid).collect(),
                    });
                    traces.extend(group_by_pid(&display, &records));
                }
                DatasetFormat::Adfa => {
                    let trace = parse_adfa_named(&text, &display)?;
                    if trace.is_empty() {
                        *dropped += 1;
                        continue;
                    }
                    traces.push(trace);
                }
            }
        }
        Ok(traces)
    };

    let normal_traces = load_class(
        &manifest.normal_paths,
        &mut dropped.normal,
        &mut pid_streams,
    )?;
    let intrusion_traces = load_class(
        &manifest.intrusion_paths,
        &mut dropped.intrusion,
        &mut pid_streams,
    )?;

    Ok(RawDataset {
        manifest: manifest.clone(),
        normal_traces,
        intrusion_traces,
        pid_streams,
        dropped_empty: dropped,
    })
}

/// One syscall value outside the admissible range.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RangeViolation {
    pub source_id: String,
    pub position: usize,
    pub value: u32,
}

/// Report-only summary of a loaded dataset against an admissible syscall range.
#[derive(Debug, Clone, Default)]
pub struct ValidationReport {
    pub normal_traces: usize,
    pub intrusion_traces: usize,
    pub normal_events: usize,
    pub intrusion_events: usize,
    pub out_of_range: Vec<RangeViolation>,
    pub dropped_empty: DroppedFiles,
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "normal: {} traces / {} events; intrusion: {} traces / {} events",
            self.normal_traces, self.normal_events, self.intrusion_traces, self.intrusion_events
        )?;
        writeln!(
            f,
            "dropped empty files: {} normal, {} intrusion",
            self.dropped_empty.normal, self.dropped_empty.intrusion
        )?;
        writeln!(f, "out-of-range syscalls: {}", self.out_of_range.len())?;
        for v in self.out_of_range.iter().take(20) {
            writeln!(f, "  {} position {}: {}", v.source_id, v.position, v.value)?;
        }
        if self.out_of_range.len() > 20 {
            writeln!(f, "  ... {} more", self.out_of_range.len() - 20)?;
        }
        Ok(())
    }
}

/// Checks every event against `[0, max_syscall]` and tallies per-class counts.
/// The dataset is not modified.
pub fn validate_dataset(ds: &RawDataset, max_syscall: u32) -> ValidationReport {
    let mut report = ValidationReport {
        normal_traces: ds.normal_traces.len(),
        intrusion_traces: ds.intrusion_traces.len(),
        dropped_empty: ds.dropped_empty,
        ..ValidationReport::default()
    };
    let mut scan = |traces: &[Trace], events: &mut usize| {
        for t in traces {
            *events += t.events.len();
            for (pos, &value) in t.events.iter().enumerate() {
                if value > max_syscall {
                    report.out_of_range.push(RangeViolation {
                        source_id: t.source_id.clone(),
                        position: pos,
                        value,
                    });
                }
            }
        }
    };
    let mut normal_events = 0;
    let mut intrusion_events = 0;
    scan(&ds.normal_traces, &mut normal_events);
    scan(&ds.intrusion_traces, &mut intrusion_events);
    report.normal_events = normal_events;
    report.intrusion_events = intrusion_events;
    report
}
