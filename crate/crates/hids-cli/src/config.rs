//! Run configuration: model selection, pipeline overrides, output location.

use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::Serialize;

use hids_core::corpus::DatasetManifest;
use hids_core::models::ModelKind;
use hids_core::preprocess::{BalancePolicy, PipelineConfig};

use crate::CliError;

/// Version stamped into `run.json` and documented alongside the CSV schemas.
pub const SCHEMA_VERSION: u32 = 1;

/// The only environment variable the tool reads: a default output directory,
/// used when `--out` is absent.
pub const OUTPUT_DIR_ENV: &str = "HIDS_OUTPUT_DIR";

pub const DEFAULT_OUTPUT_DIR: &str = "hids-out";

/// CLI-provided pipeline overrides; unset fields fall back to the manifest's
/// `[pipeline]` table and then to the built-in defaults. The de-duplication
/// switch is absent on purpose: experiment runs always execute both
/// provenances (original = dedup off, processed = dedup on).
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct PipelineOverrides {
    pub n: Option<usize>,
    pub stride: Option<usize>,
    pub balance: Option<BalancePolicy>,
    pub ratio: Option<f64>,
    pub seed: Option<u64>,
}

impl PipelineOverrides {
    pub fn apply(&self, mut base: PipelineConfig) -> PipelineConfig {
        if let Some(n) = self.n {
            base.n = n;
        }
        if let Some(stride) = self.stride {
            base.stride = stride;
        }
        if let Some(balance) = self.balance {
            base.balance = balance;
        }
        if let Some(ratio) = self.ratio {
            base.ratio = ratio;
        }
        if let Some(seed) = self.seed {
            base.seed = seed;
        }
        base
    }
}

/// An external model to bridge over the line protocol, parsed from
/// `NAME=COMMAND`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExternalEntry {
    pub name: String,
    pub command: String,
}

/// Everything one experiment run needs.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub manifests: Vec<PathBuf>,
    pub models: Vec<ModelKind>,
    pub external: Vec<ExternalEntry>,
    pub external_timeout: Duration,
    pub out_dir: PathBuf,
    pub overrides: PipelineOverrides,
    pub save_models: bool,
    pub export_pools: bool,
}

impl RunConfig {
    /// Checks the parts that make a run meaningless before any work starts.
    pub fn validate(&self) -> Result<(), CliError> {
        if self.manifests.is_empty() {
            return Err(CliError::Usage(
                "at least one --manifest is required".into(),
            ));
        }
        if self.models.is_empty() && self.external.is_empty() {
            return Err(CliError::Usage(
                "no models selected; pass --models all, a model list, or --external".into(),
            ));
        }
        if self.external_timeout.is_zero() {
            return Err(CliError::Usage(
                "--external-timeout must be positive".into(),
            ));
        }
        let mut names: Vec<&str> = self.external.iter().map(|e| e.name.as_str()).collect();
        names.extend(self.models.iter().map(|m| m.name()));
        names.sort_unstable();
        if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
            return Err(CliError::Usage(format!(
                "model name {:?} selected more than once",
                w[0]
            )));
        }
        ensure_writable_dir(&self.out_dir)?;
        Ok(())
    }

    /// Pipeline knobs for one dataset: defaults, overlaid with the manifest's
    /// `[pipeline]` table, overlaid with CLI flags.
    pub fn effective_config(&self, manifest: &DatasetManifest) -> PipelineConfig {
        let base = manifest.pipeline.clone().unwrap_or_default();
        self.overrides.apply(base)
    }
}

/// Creates the directory (and parents) and proves it is writable with a probe
/// file, so permission problems surface as a config error instead of half a
/// run.
pub fn ensure_writable_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| {
        CliError::Usage(format!(
            "output directory {} not creatable: {e}",
            dir.display()
        ))
    })?;
    let probe = dir.join(".write-probe");
    std::fs::write(&probe, b"ok").map_err(|e| {
        CliError::Usage(format!(
            "output directory {} not writable: {e}",
            dir.display()
        ))
    })?;
    let _ = std::fs::remove_file(&probe);
    Ok(())
}

/// Resolves the output directory: the `--out` flag wins, then
/// `HIDS_OUTPUT_DIR`, then `./hids-out`.
pub fn resolve_out_dir(flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR))
}

/// Expands a `--models` list into concrete kinds. `all` selects every native
/// model; explicit names are de-duplicated and reordered into the canonical
/// report order. Unknown names fail before any work.
pub fn parse_models(specs: &[String]) -> Result<Vec<ModelKind>, CliError> {
    let mut chosen = Vec::new();
    for spec in specs {
        let spec = spec.trim();
        if spec.is_empty() {
            continue;
        }
        if spec == "all" {
            return Ok(ModelKind::ALL.to_vec());
        }
        let kind: ModelKind = spec.parse().map_err(CliError::Usage)?;
        chosen.push(kind);
    }
    Ok(ModelKind::ALL
        .into_iter()
        .filter(|k| chosen.contains(k))
        .collect())
}

/// Parses `NAME=COMMAND` external model entries.
pub fn parse_external(specs: &[String]) -> Result<Vec<ExternalEntry>, CliError> {
    specs
        .iter()
        .map(|spec| {
            let (name, command) = spec.split_once('=').ok_or_else(|| {
                CliError::Usage(format!("--external expects NAME=COMMAND, got {spec:?}"))
            })?;
            let (name, command) = (name.trim(), command.trim());
            if name.is_empty() || command.is_empty() {
                return Err(CliError::Usage(format!(
                    "--external expects NAME=COMMAND with both parts non-empty, got {spec:?}"
                )));
            }
            Ok(ExternalEntry {
                name: name.to_string(),
                command: command.to_string(),
            })
        })
        .collect()
}

/// Parses the `--balance` flag.
pub fn parse_balance(s: &str) -> Result<BalancePolicy, String> {
    match s {
        "bootstrap_to_max" => Ok(BalancePolicy::BootstrapToMax),
        "none" => Ok(BalancePolicy::None),
        other => Err(format!(
            "unknown balance policy {other:?}; expected bootstrap_to_max or none"
        )),
    }
}

/// Turns a dataset/model name into a filesystem-safe token.
pub fn slug(name: &str) -> String {
    let mut out = String::with_capacity(name.len());
    let mut last_dash = true; // suppress leading dashes
    for c in name.chars() {
        if c.is_ascii_alphanumeric() {
            out.push(c.to_ascii_lowercase());
            last_dash = false;
        } else if !last_dash {
            out.push('-');
            last_dash = true;
        }
    }
    while out.ends_with('-') {
        out.pop();
    }
    if out.is_empty() {
        out.push('x');
    }
    out
}
