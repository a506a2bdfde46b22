//! Seeded synthetic syscall-corpus generator with controllable quality
//! defects.
//!
//! Traces are random walks over per-class first-order Markov chains. A
//! configurable fraction of states (the shared region) has identical
//! dynamics in both chains, so the two classes emit some identical n-grams;
//! the remaining states are split into class signatures interleaved by id
//! parity, which gives tree/neighbor models real structure to learn while
//! keeping centroid/Gaussian models near chance.
//!
//! Corpora are emitted in UNM format with synthetic PIDs. Within each file,
//! traces are interleaved round-robin so that PID grouping is exercised on
//! load.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{
    format_unm, DatasetFormat, DatasetManifest, PidStream, RawDataset, SyscallRecord, Trace,
};
use crate::derive_seed;

/// Traces per emitted UNM file; the last file of a class may hold fewer.
pub const TRACES_PER_FILE: usize = 50;

/// Probability mass left after the two preferred successors (0.44 each);
/// spread uniformly over the whole vocabulary.
const EXIT_MASS: f64 = 0.12;

const ROW_SUM_TOL: f64 = 1e-9;

#[derive(Debug, thiserror::Error)]
pub enum SynthError {
    #[error("invalid synthetic spec: {0}")]
    InvalidSpec(String),
    #[error("invalid defect rates: {0}")]
    InvalidDefects(String),
    #[error("failed to write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// A first-order Markov chain over syscall ids `0..n_states`.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovChain {
    /// Start-state distribution; must sum to 1 ± 1e-9.
    pub initial: Vec<f64>,
    /// `rows[s][t]` = P(next = t | current = s); each row sums to 1 ± 1e-9.
    pub rows: Vec<Vec<f64>>,
}

fn check_distribution(what: &str, p: &[f64]) -> Result<(), SynthError> {
    if p.iter().any(|&x| !x.is_finite() || x < 0.0) {
        return Err(SynthError::InvalidSpec(format!(
            "{what} contains a negative or non-finite probability"
        )));
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > ROW_SUM_TOL {
        return Err(SynthError::InvalidSpec(format!(
            "{what} sums to {sum}, expected 1 ± {ROW_SUM_TOL}"
        )));
    }
    Ok(())
}

impl MarkovChain {
    pub fn n_states(&self) -> usize {
        self.rows.len()
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let v = self.rows.len();
        if v < 2 {
            return Err(SynthError::InvalidSpec(
                "chain needs at least 2 states".into(),
            ));
        }
        if self.initial.len() != v {
            return Err(SynthError::InvalidSpec(format!(
                "initial distribution has {} entries for {v} states",
                self.initial.len()
            )));
        }
        check_distribution("initial distribution", &self.initial)?;
        for (s, row) in self.rows.iter().enumerate() {
            if row.len() != v {
                return Err(SynthError::InvalidSpec(format!(
                    "row {s} has {} entries for {v} states",
                    row.len()
                )));
            }
            check_distribution(&format!("transition row {s}"), row)?;
        }
        Ok(())
    }

    /// A degenerate permutation-cycle chain: always starts at state 0 and
    /// moves deterministically to `(s + 1) mod n`. Every walk is identical,
    /// so using it for both classes makes de-duplication remove everything —
    /// handy for exercising that failure path.
    pub fn deterministic_cycle(n_states: usize) -> Self {
        assert!(n_states >= 2);
        let mut initial = vec![0.0; n_states];
        initial[0] = 1.0;
        let rows = (0..n_states)
            .map(|s| {
                let mut row = vec![0.0; n_states];
                row[(s + 1) % n_states] = 1.0;
                row
            })
            .collect();
        Self { initial, rows }
    }
}

/// Precomputed samplers for one chain.
struct ChainSampler {
    initial: WeightedIndex<f64>,
    rows: Vec<WeightedIndex<f64>>,
}

impl ChainSampler {
    fn new(chain: &MarkovChain) -> Self {
        let index = |p: &[f64]| {
            WeightedIndex::new(p.iter().cloned()).expect("validated probability distribution")
        };
        Self {
            initial: index(&chain.initial),
            rows: chain.rows.iter().map(|r| index(r)).collect(),
        }
    }

    fn walk(&self, len: usize, rng: &mut ChaCha8Rng) -> Vec<u32> {
        let mut out = Vec::with_capacity(len);
        let mut state = self.initial.sample(rng);
        out.push(state as u32);
        for _ in 1..len {
            state = self.rows[state].sample(rng);
            out.push(state as u32);
        }
        out
    }
}

/// Quality defects to inject, all seeded and count-based.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DefectSpec {
    /// Fraction of each class's traces whose label is flipped to the other
    /// class (whole traces move lists; both directions flip the same way).
    pub label_flip_rate: f64,
    /// Target duplicate fraction r ∈ [0, 1): round(r·N/(1−r)) copies of
    /// existing traces are appended per class, so the class's measured
    /// duplication rate lands on r up to count rounding.
    pub duplicate_injection_rate: f64,
    /// The intrusion class is down-sampled to round(factor × count) traces;
    /// 1.0 leaves it untouched.
    pub imbalance_factor: f64,
}

impl Default for DefectSpec {
    fn default() -> Self {
        Self {
            label_flip_rate: 0.0,
            duplicate_injection_rate: 0.0,
            imbalance_factor: 1.0,
        }
    }
}

impl DefectSpec {
    pub fn is_neutral(&self) -> bool {
        self.label_flip_rate == 0.0
            && self.duplicate_injection_rate == 0.0
            && self.imbalance_factor == 1.0
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let in_unit = |v: f64| (0.0..=1.0).contains(&v);
        if !in_unit(self.label_flip_rate) {
            return Err(SynthError::InvalidDefects(format!(
                "label_flip_rate {} outside [0, 1]",
                self.label_flip_rate
            )));
        }
        if !(0.0..1.0).contains(&self.duplicate_injection_rate) {
            return Err(SynthError::InvalidDefects(format!(
                "duplicate_injection_rate {} outside [0, 1)",
                self.duplicate_injection_rate
            )));
        }
        if !in_unit(self.imbalance_factor) {
            return Err(SynthError::InvalidDefects(format!(
                "imbalance_factor {} outside [0, 1]",
                self.imbalance_factor
            )));
        }
        Ok(())
    }
}

/// Full generator specification; `generate` is a pure function of this.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub name: String,
    pub vocab_size: usize,
    pub traces_per_class: usize,
    /// Inclusive (min, max) events per trace.
    pub trace_len: (usize, usize),
    pub normal_chain: MarkovChain,
    pub intrusion_chain: MarkovChain,
    /// Fraction of states whose outgoing dynamics are shared verbatim
    /// between the two chains.
    pub signature_overlap: f64,
    pub defects: DefectSpec,
    pub seed: u64,
}

/// States `s` with `s % 10 < round(10·overlap)` form the shared region.
fn shared_states(vocab_size: usize, overlap: f64) -> Vec<usize> {
    let cutoff = (10.0 * overlap).round() as usize;
    (0..vocab_size).filter(|s| s % 10 < cutoff).collect()
}

/// Non-shared states striped by parity: even ids are normal signature,
/// odd ids intrusion signature.
fn signature_states(vocab_size: usize, overlap: f64, parity: usize) -> Vec<usize> {
    let cutoff = (10.0 * overlap).round() as usize;
    (0..vocab_size)
        .filter(|s| s % 10 >= cutoff && s % 2 == parity)
        .collect()
}

/// First member of `set` strictly after `s`, and the one after it,
/// cyclically. `set` must be sorted and non-empty.
fn next_two_cyclic(set: &[usize], s: usize) -> (usize, usize) {
    let i = set.partition_point(|&x| x <= s);
    (set[i % set.len()], set[(i + 1) % set.len()])
}

fn build_class_chain(vocab_size: usize, overlap: f64, parity: usize) -> MarkovChain {
    let shared = shared_states(vocab_size, overlap);
    let sig = signature_states(vocab_size, overlap, parity);
    let own: &[usize] = if sig.is_empty() { &shared } else { &sig };
    debug_assert!(!own.is_empty());

    let base = EXIT_MASS / vocab_size as f64;
    let preferred = (1.0 - EXIT_MASS) / 2.0;
    let mut rows = vec![vec![base; vocab_size]; vocab_size];
    for (s, row) in rows.iter_mut().enumerate() {
        // Shared states route within the shared region (identically in both
        // chains); everything else routes into this class's signature.
        let target: &[usize] = if shared.binary_search(&s).is_ok() {
            &shared
        } else {
            own
        };
        let (p1, p2) = next_two_cyclic(target, s);
        row[p1] += preferred;
        row[p2] += preferred;
    }

    let mut initial = vec![0.0; vocab_size];
    for &s in own {
        initial[s] = 1.0 / own.len() as f64;
    }
    MarkovChain { initial, rows }
}

impl SynthSpec {
    /// Builds both class chains structurally from the overlap fraction; no
    /// randomness is involved in chain construction.
    #[allow(clippy::too_many_arguments)]
    pub fn with_signature_overlap(
        name: impl Into<String>,
        vocab_size: usize,
        traces_per_class: usize,
        trace_len: (usize, usize),
        signature_overlap: f64,
        defects: DefectSpec,
        seed: u64,
    ) -> Result<Self, SynthError> {
        if !(0.0..=1.0).contains(&signature_overlap) {
            return Err(SynthError::InvalidSpec(format!(
                "signature_overlap {signature_overlap} outside [0, 1]"
            )));
        }
        if vocab_size < 4 {
            return Err(SynthError::InvalidSpec(
                "vocab_size must be at least 4".into(),
            ));
        }
        let spec = Self {
            name: name.into(),
            vocab_size,
            traces_per_class,
            trace_len,
            normal_chain: build_class_chain(vocab_size, signature_overlap, 0),
            intrusion_chain: build_class_chain(vocab_size, signature_overlap, 1),
            signature_overlap,
            defects,
            seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        if self.traces_per_class == 0 {
            return Err(SynthError::InvalidSpec(
                "traces_per_class must be positive".into(),
            ));
        }
        if self.trace_len.0 == 0 || self.trace_len.0 > self.trace_len.1 {
            return Err(SynthError::InvalidSpec(format!(
                "trace_len range ({}, {}) is invalid",
                self.trace_len.0, self.trace_len.1
            )));
        }
        if !(0.0..=1.0).contains(&self.signature_overlap) {
            return Err(SynthError::InvalidSpec(format!(
                "signature_overlap {} outside [0, 1]",
                self.signature_overlap
            )));
        }
        for (which, chain) in [
            ("normal_chain", &self.normal_chain),
            ("intrusion_chain", &self.intrusion_chain),
        ] {
            chain
                .validate()
                .map_err(|e| SynthError::InvalidSpec(format!("{which}: {e}")))?;
            if chain.n_states() != self.vocab_size {
                return Err(SynthError::InvalidSpec(format!(
                    "{which} has {} states, expected vocab_size {}",
                    chain.n_states(),
                    self.vocab_size
                )));
            }
        }
        self.defects.validate()?;
        Ok(())
    }
}

fn gen_class(spec: &SynthSpec, chain: &MarkovChain, class_name: &str, tag: &str) -> Vec<Trace> {
    let sampler = ChainSampler::new(chain);
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(spec.seed, tag));
    (0..spec.traces_per_class)
        .map(|k| {
            let len = rng.gen_range(spec.trace_len.0..=spec.trace_len.1);
            Trace::new(
                format!("synth/{class_name}/{k}"),
                sampler.walk(len, &mut rng),
            )
        })
        .collect()
}

/// Round-robin record interleaving for one file's traces.
fn interleave(traces: &[Trace], pids: &[u32]) -> Vec<SyscallRecord> {
    let max_len = traces.iter().map(|t| t.events.len()).max().unwrap_or(0);
    let mut records = Vec::new();
    for pos in 0..max_len {
        for (t, &pid) in traces.iter().zip(pids) {
            if let Some(&syscall) = t.events.get(pos) {
                records.push(SyscallRecord { pid, syscall });
            }
        }
    }
    records
}

struct FilePlan {
    name: String,
    records: Vec<SyscallRecord>,
}

/// Chunks one class into files of `TRACES_PER_FILE` interleaved traces,
/// assigning PIDs sequentially from `first_pid`. Returns the plans and the
/// next free PID.
fn plan_class(traces: &[Trace], class_name: &str, first_pid: u32) -> (Vec<FilePlan>, u32) {
    let mut plans = Vec::new();
    let mut pid = first_pid;
    for (i, chunk) in traces.chunks(TRACES_PER_FILE).enumerate() {
        let pids: Vec<u32> = (0..chunk.len() as u32).map(|k| pid + k).collect();
        pid += chunk.len() as u32;
        plans.push(FilePlan {
            name: format!("{class_name}_{i:03}.txt"),
            records: interleave(chunk, &pids),
        });
    }
    (plans, pid)
}

/// Recomputes `manifest.normal_paths` / `intrusion_paths` / `pid_streams`
/// from the trace lists so the in-memory dataset mirrors what `write_corpus`
/// emits. PIDs are positional: 1..=N over normal then intrusion traces.
fn rebuild_layout(ds: &mut RawDataset) {
    let (normal_plans, next) = plan_class(&ds.normal_traces, "normal", 1);
    let (intrusion_plans, _) = plan_class(&ds.intrusion_traces, "intrusion", next);
    ds.manifest.normal_paths = normal_plans
        .iter()
        .map(|p| PathBuf::from(&p.name))
        .collect();
    ds.manifest.intrusion_paths = intrusion_plans
        .iter()
        .map(|p| PathBuf::from(&p.name))
        .collect();
    ds.pid_streams = normal_plans
        .iter()
        .chain(&intrusion_plans)
        .map(|p| PidStream {
            path: p.name.clone(),
            pids: p.records.iter().map(|r| r.pid).collect(),
        })
        .collect();
}

/// Generates the corpus described by `spec`. Deterministic for a fixed spec
/// (including its seed); the two classes use independently derived seeds.
pub fn generate(spec: &SynthSpec) -> Result<RawDataset, SynthError> {
    spec.validate()?;
    let (normal_traces, intrusion_traces) = rayon::join(
        || gen_class(spec, &spec.normal_chain, "normal", "synth/class0"),
        || gen_class(spec, &spec.intrusion_chain, "intrusion", "synth/class1"),
    );
    let mut manifest = DatasetManifest::in_memory(&spec.name, DatasetFormat::Unm);
    manifest.max_syscall = (spec.vocab_size - 1) as u32;
    manifest
        .metadata
        .insert("reputation".into(), "synthetic".into());
    manifest.metadata.insert(
        "context".into(),
        format!(
            "seeded generator: signature_overlap {}, seed {}",
            spec.signature_overlap, spec.seed
        ),
    );
    let mut ds = RawDataset {
        manifest,
        normal_traces,
        intrusion_traces,
        pid_streams: Vec::new(),
        dropped_empty: Default::default(),
    };
    rebuild_layout(&mut ds);
    Ok(ds)
}

/// Removes a seeded without-replacement sample of `k` traces, preserving the
/// order of the remainder. Returns the removed traces in original order.
fn split_off_sample(v: &mut Vec<Trace>, k: usize, rng: &mut ChaCha8Rng) -> Vec<Trace> {
    let k = k.min(v.len());
    if k == 0 {
        return Vec::new();
    }
    let chosen: HashSet<usize> = rand::seq::index::sample(rng, v.len(), k)
        .into_iter()
        .collect();
    let mut kept = Vec::with_capacity(v.len() - k);
    let mut removed = Vec::with_capacity(k);
    for (i, t) in v.drain(..).enumerate() {
        if chosen.contains(&i) {
            removed.push(t);
        } else {
            kept.push(t);
        }
    }
    *v = kept;
    removed
}

fn duplicate_class(v: &mut Vec<Trace>, rate: f64, rng: &mut ChaCha8Rng) {
    let n = v.len();
    if n == 0 || rate <= 0.0 {
        return;
    }
    let copies = (rate * n as f64 / (1.0 - rate)).round() as usize;
    for _ in 0..copies {
        let i = rng.gen_range(0..n);
        v.push(v[i].clone());
    }
}

fn downsample(v: &mut Vec<Trace>, keep: usize, rng: &mut ChaCha8Rng) {
    if keep >= v.len() {
        return;
    }
    let mut idx = rand::seq::index::sample(rng, v.len(), keep).into_vec();
    idx.sort_unstable();
    *v = idx.into_iter().map(|i| v[i].clone()).collect();
}

/// Applies seeded defects in a fixed order: label flips, then duplicate
/// injection, then class imbalance. All counts are rounded, so measured
/// defect magnitudes match the requested rates up to 1/total. The file
/// layout (paths, PID streams) is recomputed for the new trace lists.
pub fn inject_defects(
    ds: &RawDataset,
    defects: &DefectSpec,
    seed: u64,
) -> Result<RawDataset, SynthError> {
    defects.validate()?;
    let mut normal = ds.normal_traces.clone();
    let mut intrusion = ds.intrusion_traces.clone();

    if defects.label_flip_rate > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "defects/flip"));
        let k_normal = (defects.label_flip_rate * normal.len() as f64).round() as usize;
        let k_intrusion = (defects.label_flip_rate * intrusion.len() as f64).round() as usize;
        let moved_out = split_off_sample(&mut normal, k_normal, &mut rng);
        let moved_in = split_off_sample(&mut intrusion, k_intrusion, &mut rng);
        intrusion.extend(moved_out);
        normal.extend(moved_in);
    }
    if defects.duplicate_injection_rate > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "defects/duplicate"));
        duplicate_class(&mut normal, defects.duplicate_injection_rate, &mut rng);
        duplicate_class(&mut intrusion, defects.duplicate_injection_rate, &mut rng);
    }
    if defects.imbalance_factor < 1.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "defects/imbalance"));
        let keep = (defects.imbalance_factor * intrusion.len() as f64).round() as usize;
        downsample(&mut intrusion, keep, &mut rng);
    }

    let mut out = RawDataset {
        manifest: ds.manifest.clone(),
        normal_traces: normal,
        intrusion_traces: intrusion,
        pid_streams: Vec::new(),
        dropped_empty: ds.dropped_empty,
    };
    rebuild_layout(&mut out);
    Ok(out)
}

#[derive(Serialize)]
struct ManifestOut<'a> {
    name: &'a str,
    format: DatasetFormat,
    max_syscall: u32,
    normal_paths: &'a [PathBuf],
    intrusion_paths: &'a [PathBuf],
    metadata: &'a BTreeMap<String, String>,
}

/// Writes the dataset as UNM files plus a `manifest.toml` into `dir`
/// (created if needed) and returns the manifest path. Byte-deterministic
/// for a fixed dataset.
pub fn write_corpus(ds: &RawDataset, dir: &Path) -> Result<PathBuf, SynthError> {
    let io_err = |path: &Path| {
        let path = path.to_path_buf();
        move |source: std::io::Error| SynthError::Io { path, source }
    };
    fs::create_dir_all(dir).map_err(io_err(dir))?;

    let (normal_plans, next) = plan_class(&ds.normal_traces, "normal", 1);
    let (intrusion_plans, _) = plan_class(&ds.intrusion_traces, "intrusion", next);
    for plan in normal_plans.iter().chain(&intrusion_plans) {
        let path = dir.join(&plan.name);
        fs::write(&path, format_unm(&plan.records)).map_err(io_err(&path))?;
    }

    let manifest = ManifestOut {
        name: &ds.manifest.name,
        format: DatasetFormat::Unm,
        max_syscall: ds.manifest.max_syscall,
        normal_paths: &ds.manifest.normal_paths,
        intrusion_paths: &ds.manifest.intrusion_paths,
        metadata: &ds.manifest.metadata,
    };
    let text = toml::to_string_pretty(&manifest)
        .expect("manifest serialization cannot fail for string/path fields");
    let manifest_path = dir.join("manifest.toml");
    fs::write(&manifest_path, text).map_err(io_err(&manifest_path))?;
    Ok(manifest_path)
}

/// TOML-facing generator configuration; mirrors the dataset-manifest style.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthConfig {
    #[serde(default = "default_name")]
    pub name: String,
    pub vocab_size: usize,
    pub traces_per_class: usize,
    /// Inclusive [min, max] events per trace.
    pub trace_len: [usize; 2],
    pub signature_overlap: f64,
    #[serde(default)]
    pub defects: DefectSpec,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

fn default_name() -> String {
    "synthetic".to_string()
}

fn default_seed() -> u64 {
    42
}

impl SynthConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, SynthError> {
        toml::from_str(text).map_err(|e| SynthError::InvalidSpec(e.to_string()))
    }

    pub fn from_path(path: &Path) -> Result<Self, SynthError> {
        let text = fs::read_to_string(path).map_err(|source| SynthError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    pub fn to_spec(&self) -> Result<SynthSpec, SynthError> {
        SynthSpec::with_signature_overlap(
            self.name.clone(),
            self.vocab_size,
            self.traces_per_class,
            (self.trace_len[0], self.trace_len[1]),
            self.signature_overlap,
            self.defects,
            self.seed,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::load_dataset;
    use crate::preprocess::{run_pipeline, PipelineConfig, PreprocessError};
    use crate::quality::{cross_class_overlap, duplication_rate};

    fn small_spec(overlap: f64, traces: usize, seed: u64) -> SynthSpec {
        SynthSpec::with_signature_overlap(
            "test",
            40,
            traces,
            (12, 18),
            overlap,
            DefectSpec::default(),
            seed,
        )
        .unwrap()
    }

    #[test]
    fn constructed_chains_are_valid_distributions() {
        let spec = small_spec(0.3, 10, 1);
        spec.normal_chain.validate().unwrap();
        spec.intrusion_chain.validate().unwrap();
        // Shared states (s % 10 < 3) have identical rows in both chains.
        for s in (0..40).filter(|s| s % 10 < 3) {
            assert_eq!(spec.normal_chain.rows[s], spec.intrusion_chain.rows[s]);
        }
        // Signature sets are disjoint.
        let n: HashSet<usize> = signature_states(40, 0.3, 0).into_iter().collect();
        let i: HashSet<usize> = signature_states(40, 0.3, 1).into_iter().collect();
        assert!(n.is_disjoint(&i));
        assert!(!n.is_empty() && !i.is_empty());
    }

    #[test]
    fn invalid_transition_table_is_rejected() {
        let mut spec = small_spec(0.0, 5, 1);
        spec.normal_chain.rows[0][0] += 0.5; // row now sums to 1.5
        let err = generate(&spec).unwrap_err();
        assert!(matches!(err, SynthError::InvalidSpec(_)), "{err}");
    }

    #[test]
    fn generation_is_deterministic_and_seed_sensitive() {
        let a = generate(&small_spec(0.3, 30, 7)).unwrap();
        let b = generate(&small_spec(0.3, 30, 7)).unwrap();
        assert_eq!(a.normal_traces, b.normal_traces);
        assert_eq!(a.intrusion_traces, b.intrusion_traces);
        let c = generate(&small_spec(0.3, 30, 8)).unwrap();
        assert_ne!(a.normal_traces, c.normal_traces);
    }

    #[test]
    fn written_corpus_is_byte_identical_across_runs_and_round_trips() {
        let spec = small_spec(0.3, 120, 11);
        let ds = generate(&spec).unwrap();
        let dir_a = tempfile::tempdir().unwrap();
        let dir_b = tempfile::tempdir().unwrap();
        let manifest_a = write_corpus(&ds, dir_a.path()).unwrap();
        write_corpus(&generate(&spec).unwrap(), dir_b.path()).unwrap();

        let mut names: Vec<_> = fs::read_dir(dir_a.path())
            .unwrap()
            .map(|e| e.unwrap().file_name())
            .collect();
        names.sort();
        // 120 traces/class → 3 files per class, plus the manifest.
        assert_eq!(names.len(), 7);
        for name in &names {
            let a = fs::read(dir_a.path().join(name)).unwrap();
            let b = fs::read(dir_b.path().join(name)).unwrap();
            assert_eq!(a, b, "{name:?} differs between identical runs");
        }

        // Reloading reproduces the in-memory traces and PID streams.
        let manifest = DatasetManifest::from_path(&manifest_a).unwrap();
        let loaded = load_dataset(&manifest).unwrap();
        assert_eq!(loaded.normal_traces.len(), ds.normal_traces.len());
        for (l, g) in loaded.normal_traces.iter().zip(&ds.normal_traces) {
            assert_eq!(l.events, g.events);
        }
        for (l, g) in loaded.intrusion_traces.iter().zip(&ds.intrusion_traces) {
            assert_eq!(l.events, g.events);
        }
        assert_eq!(loaded.pid_streams, ds.pid_streams);
    }

    #[test]
    fn zero_overlap_keeps_classes_nearly_disjoint() {
        let ds = generate(&small_spec(0.0, 200, 3)).unwrap();
        let cfg = PipelineConfig::default();
        let out = run_pipeline(&ds, &cfg).unwrap();
        let normal: Vec<_> = out
            .original
            .of_class(crate::preprocess::ClassLabel::Normal)
            .map(|s| s.seq.clone())
            .collect();
        let intrusion: Vec<_> = out
            .original
            .of_class(crate::preprocess::ClassLabel::Intrusion)
            .map(|s| s.seq.clone())
            .collect();
        assert!(cross_class_overlap(&normal, &intrusion).unwrap() < 0.02);
        let removed = out.stats.dedup_removed_normal + out.stats.dedup_removed_intrusion;
        let total = normal.len() + intrusion.len();
        assert!(
            (removed as f64) < 0.02 * total as f64,
            "dedup removed {removed} of {total}"
        );
    }

    #[test]
    fn identical_chains_empty_both_classes_through_dedup() {
        let cycle = MarkovChain::deterministic_cycle(12);
        let spec = SynthSpec {
            name: "cycle".into(),
            vocab_size: 12,
            traces_per_class: 20,
            trace_len: (12, 12),
            normal_chain: cycle.clone(),
            intrusion_chain: cycle,
            signature_overlap: 1.0,
            defects: DefectSpec::default(),
            seed: 5,
        };
        let ds = generate(&spec).unwrap();
        let err = run_pipeline(&ds, &PipelineConfig::default()).unwrap_err();
        assert!(matches!(err, PreprocessError::EmptyClass(_)), "{err}");
    }

    #[test]
    fn neutral_defects_leave_dataset_unchanged() {
        let ds = generate(&small_spec(0.2, 60, 9)).unwrap();
        let out = inject_defects(&ds, &DefectSpec::default(), 1).unwrap();
        assert_eq!(out.normal_traces, ds.normal_traces);
        assert_eq!(out.intrusion_traces, ds.intrusion_traces);
        assert_eq!(out.pid_streams, ds.pid_streams);
        assert_eq!(out.manifest.normal_paths, ds.manifest.normal_paths);
    }

    #[test]
    fn imbalance_downsamples_intrusion_class() {
        let ds = generate(&small_spec(0.2, 100, 2)).unwrap();
        let defects = DefectSpec {
            imbalance_factor: 0.4,
            ..DefectSpec::default()
        };
        let out = inject_defects(&ds, &defects, 3).unwrap();
        assert_eq!(out.normal_traces.len(), 100);
        assert_eq!(out.intrusion_traces.len(), 40);
        // Survivors keep their original relative order.
        let ids: Vec<&str> = out
            .intrusion_traces
            .iter()
            .map(|t| t.source_id.as_str())
            .collect();
        let mut sorted = ids.clone();
        sorted.sort_by_key(|id| id.rsplit('/').next().unwrap().parse::<usize>().unwrap());
        assert_eq!(ids, sorted);
    }

    #[test]
    fn duplicate_injection_hits_requested_rate_within_rounding() {
        // 100 distinct single-gram traces per class (trace_len == 6).
        let spec = SynthSpec::with_signature_overlap(
            "dup",
            40,
            100,
            (6, 6),
            0.0,
            DefectSpec::default(),
            17,
        )
        .unwrap();
        let ds = generate(&spec).unwrap();
        let defects = DefectSpec {
            duplicate_injection_rate: 0.25,
            ..DefectSpec::default()
        };
        let out = inject_defects(&ds, &defects, 4).unwrap();
        assert_eq!(out.normal_traces.len(), 133); // 100 + round(0.25·100/0.75)
        let grams: Vec<Vec<u32>> = out.normal_traces.iter().map(|t| t.events.clone()).collect();
        let measured = duplication_rate(&grams).unwrap();
        let baseline: Vec<Vec<u32>> = ds.normal_traces.iter().map(|t| t.events.clone()).collect();
        let base_rate = duplication_rate(&baseline).unwrap();
        // Injected duplication shows up on top of any generator collisions.
        let total = grams.len() as f64;
        assert!(
            (measured - base_rate - 0.25).abs() <= 1.0 / total + 0.01,
            "measured {measured}, baseline {base_rate}"
        );
    }

    #[test]
    fn label_flips_move_whole_traces_both_directions() {
        let ds = generate(&small_spec(0.2, 100, 6)).unwrap();
        let defects = DefectSpec {
            label_flip_rate: 0.05,
            ..DefectSpec::default()
        };
        let out = inject_defects(&ds, &defects, 8).unwrap();
        assert_eq!(out.normal_traces.len(), 100);
        assert_eq!(out.intrusion_traces.len(), 100);
        let normal_born_in_intrusion = out
            .intrusion_traces
            .iter()
            .filter(|t| t.source_id.starts_with("synth/normal/"))
            .count();
        let intrusion_born_in_normal = out
            .normal_traces
            .iter()
            .filter(|t| t.source_id.starts_with("synth/intrusion/"))
            .count();
        assert_eq!(normal_born_in_intrusion, 5);
        assert_eq!(intrusion_born_in_normal, 5);
    }

    #[test]
    fn synth_config_parses_toml_and_builds_spec() {
        let text = r#"
            name = "demo"
            vocab_size = 40
            traces_per_class = 50
            trace_len = [12, 18]
            signature_overlap = 0.3
            seed = 9

            [defects]
            duplicate_injection_rate = 0.1
        "#;
        let cfg = SynthConfig::from_toml_str(text).unwrap();
        assert_eq!(cfg.name, "demo");
        assert_eq!(cfg.defects.duplicate_injection_rate, 0.1);
        assert_eq!(cfg.defects.imbalance_factor, 1.0);
        let spec = cfg.to_spec().unwrap();
        assert_eq!(spec.vocab_size, 40);

        assert!(SynthConfig::from_toml_str("vocab_size = 1").is_err());
    }
}
