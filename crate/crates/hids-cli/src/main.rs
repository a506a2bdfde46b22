//! `hids`: batch experiments for syscall-trace intrusion detection.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};

use hids_core::corpus::{load_dataset, DatasetManifest};
use hids_core::preprocess::BalancePolicy;
use hids_core::quality::consistency_check;
use hids_core::synth::{generate, inject_defects, write_corpus, SynthConfig};

use hids_cli::check::adapter_check;
use hids_cli::config::{
    parse_balance, parse_external, parse_models, resolve_out_dir, PipelineOverrides, RunConfig,
};
use hids_cli::plot::{emit_bars, emit_histograms, emit_rocs};
use hids_cli::runner::run_experiment;
use hids_cli::CliError;

#[derive(Parser)]
#[command(
    name = "hids",
    version,
    about = "Batch experiments for syscall-trace intrusion detection",
    long_about = "Ingests syscall trace corpora, runs the n-gram cleaning pipeline, trains and \
                  evaluates classifiers on both the original and the processed data, measures \
                  data quality, and emits CSV reports plus standalone SVG figures.\n\n\
                  Exit codes: 0 success, 1 runtime/cell failure, 2 usage or configuration error.\n\
                  The only environment variable read is HIDS_OUTPUT_DIR (default output directory \
                  when --out is not given)."
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Load a dataset from its manifest and print a validation report.
    IngestValidate {
        /// Dataset manifest (TOML).
        #[arg(long)]
        manifest: PathBuf,
        /// Admissible syscall range override (defaults to the manifest's).
        #[arg(long)]
        max_syscall: Option<u32>,
    },
    /// Generate a synthetic corpus (with optional injected defects) on disk.
    Synth {
        /// Generator configuration (TOML).
        #[arg(long)]
        config: PathBuf,
        /// Directory to write the corpus into (a subdirectory named after the
        /// dataset is created). Defaults to --out resolution rules.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the experiment grid and write CSV artifacts plus a summary.
    Pipeline(RunArgs),
    /// Run the experiment grid, then render every figure from the CSVs.
    Report(RunArgs),
    /// Render overlaid class histograms from a finished run directory.
    Histogram {
        /// Output directory of a previous pipeline/report run.
        #[arg(long)]
        run: PathBuf,
        /// Restrict to one dataset.
        #[arg(long)]
        dataset: Option<String>,
    },
    /// Render ROC curves (one figure per dataset and provenance) from a run.
    Roc {
        #[arg(long)]
        run: PathBuf,
        #[arg(long)]
        dataset: Option<String>,
    },
    /// Render the clustered recall/FPR bar chart from a run.
    Bars {
        #[arg(long)]
        run: PathBuf,
    },
    /// Exercise an external model over the line protocol and report a verdict.
    AdapterCheck {
        /// Command line of the external model (split on whitespace).
        #[arg(long)]
        command: String,
        /// Wall-clock budget in seconds for the whole exchange.
        #[arg(long, default_value_t = 30)]
        timeout_secs: u64,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Dataset manifest(s); repeat for several datasets.
    #[arg(long, required = true)]
    manifest: Vec<PathBuf>,
    /// Native models to run: "all" or a comma-separated list
    /// (kmeans,logreg,svm_poly,mlp,dtree,rforest,knn,gnb).
    #[arg(long, default_value = "all", value_delimiter = ',')]
    models: Vec<String>,
    /// Output directory (falls back to HIDS_OUTPUT_DIR, then ./hids-out).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Gram length.
    #[arg(long)]
    n: Option<usize>,
    /// Window step.
    #[arg(long)]
    stride: Option<usize>,
    /// Balance policy: bootstrap_to_max or none.
    #[arg(long, value_parser = parse_balance)]
    balance: Option<BalancePolicy>,
    /// Train fraction in (0, 1).
    #[arg(long)]
    ratio: Option<f64>,
    /// Root seed; every random stage derives from it.
    #[arg(long)]
    seed: Option<u64>,
    /// Save every fitted model as JSON under models/.
    #[arg(long)]
    save_models: bool,
    /// Export the original and processed sequence pools under pools/.
    #[arg(long)]
    export_pools: bool,
    /// External model over the line protocol, as NAME=COMMAND; repeatable.
    #[arg(long)]
    external: Vec<String>,
    /// Wall-clock budget per external model exchange, in seconds.
    #[arg(long, default_value_t = 120)]
    external_timeout_secs: u64,
    /// Worker threads for model cells (default: one per core).
    #[arg(long)]
    threads: Option<usize>,
}

impl RunArgs {
    fn into_config(self) -> Result<(RunConfig, Option<usize>), CliError> {
        let models = parse_models(&self.models)?;
        let external = parse_external(&self.external)?;
        let cfg = RunConfig {
            manifests: self.manifest,
            models,
            external,
            external_timeout: Duration::from_secs(self.external_timeout_secs),
            out_dir: resolve_out_dir(self.out),
            overrides: PipelineOverrides {
                n: self.n,
                stride: self.stride,
                balance: self.balance,
                ratio: self.ratio,
                seed: self.seed,
            },
            save_models: self.save_models,
            export_pools: self.export_pools,
        };
        Ok((cfg, self.threads))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn dispatch(cli: Cli) -> Result<ExitCode, CliError> {
    match cli.cmd {
        Cmd::IngestValidate {
            manifest,
            max_syscall,
        } => cmd_ingest_validate(&manifest, max_syscall),
        Cmd::Synth { config, out } => cmd_synth(&config, out),
        Cmd::Pipeline(args) => cmd_run(args, false),
        Cmd::Report(args) => cmd_run(args, true),
        Cmd::Histogram { run, dataset } => {
            let written = emit_histograms(&run, dataset.as_deref())?;
            for path in written {
                println!("{}", path.display());
            }
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Roc { run, dataset } => {
            let written = emit_rocs(&run, dataset.as_deref())?;
            for path in written {
                println!("{}", path.display());
            }
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Bars { run } => {
            println!("{}", emit_bars(&run)?.display());
            Ok(ExitCode::SUCCESS)
        }
        Cmd::AdapterCheck {
            command,
            timeout_secs,
        } => {
            if timeout_secs == 0 {
                return Err(CliError::Usage("--timeout-secs must be positive".into()));
            }
            let report = adapter_check(&command, Duration::from_secs(timeout_secs))?;
            print!("{}", report.render(&command));
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn cmd_ingest_validate(manifest: &Path, max_syscall: Option<u32>) -> Result<ExitCode, CliError> {
    let manifest = DatasetManifest::from_path(manifest)
        .map_err(|e| CliError::Usage(format!("manifest {}: {e}", manifest.display())))?;
    let ds = load_dataset(&manifest).map_err(|e| CliError::Failure(e.to_string()))?;
    let limit = max_syscall.unwrap_or(manifest.max_syscall);
    let report = hids_core::corpus::validate_dataset(&ds, limit);
    println!("dataset: {} ({:?} format)", manifest.name, manifest.format);
    println!("admissible syscall range: 0..={limit}");
    print!("{report}");
    println!(
        "consistency violations (out-of-range values + PID interleaving): {}",
        consistency_check(&ds, limit)
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_synth(config: &Path, out: Option<PathBuf>) -> Result<ExitCode, CliError> {
    let config = SynthConfig::from_path(config)
        .map_err(|e| CliError::Usage(format!("synth config: {e}")))?;
    let spec = config
        .to_spec()
        .map_err(|e| CliError::Usage(format!("synth config: {e}")))?;
    let out_dir = resolve_out_dir(out);
    hids_cli::config::ensure_writable_dir(&out_dir)?;
    let ds = generate(&spec).map_err(|e| CliError::Failure(e.to_string()))?;
    let ds = if spec.defects.is_neutral() {
        ds
    } else {
        inject_defects(&ds, &spec.defects, spec.seed)
            .map_err(|e| CliError::Failure(e.to_string()))?
    };
    let corpus_dir = out_dir.join(hids_cli::config::slug(&spec.name));
    let manifest_path =
        write_corpus(&ds, &corpus_dir).map_err(|e| CliError::Failure(e.to_string()))?;
    println!("{}", manifest_path.display());
    println!(
        "traces: {} normal, {} intrusion",
        ds.normal_traces.len(),
        ds.intrusion_traces.len()
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_run(args: RunArgs, with_figures: bool) -> Result<ExitCode, CliError> {
    let (cfg, threads) = args.into_config()?;
    let run = || run_experiment(&cfg);
    let output = match threads {
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| CliError::Usage(format!("--threads {t}: {e}")))?;
            pool.install(run)?
        }
        None => run()?,
    };
    if with_figures {
        let mut figures: Vec<PathBuf> = Vec::new();
        if output.histogram.is_empty() {
            eprintln!("warning: no histogram rows; histogram figures skipped");
        } else {
            figures.extend(emit_histograms(&cfg.out_dir, None)?);
        }
        if output.reports.is_empty() {
            eprintln!("warning: no reports; ROC figures skipped");
        } else {
            figures.extend(emit_rocs(&cfg.out_dir, None)?);
        }
        if output.before_after_rows.is_empty() {
            eprintln!("warning: no before/after rows; bar chart skipped");
        } else {
            figures.push(emit_bars(&cfg.out_dir)?);
        }
        for path in figures {
            println!("{}", path.display());
        }
    }
    println!(
        "wrote {} artifacts to {}",
        output.files.len(),
        cfg.out_dir.display()
    );
    if output.failed_cells() > 0 {
        eprintln!(
            "error: {} cell(s) failed; see {}",
            output.failed_cells(),
            cfg.out_dir.join("errors.csv").display()
        );
        return Ok(ExitCode::FAILURE);
    }
    Ok(ExitCode::SUCCESS)
}
