//! Experiment orchestration: load datasets, run the preparation pipeline per
//! provenance, fit and evaluate every selected model, assemble CSV artifacts
//! and the summary document.
//!
//! Cell = (dataset × provenance × model). Cells run on the rayon pool; each
//! failure is recorded in the errors table and never aborts sibling cells.
//! Every artifact write happens sequentially afterwards, in a fixed order, so
//! a run with the same configuration produces a byte-identical output tree.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use hids_core::adapter::{run_protocol, ExternalModelSpec, EXTERNAL_THRESHOLD};
use hids_core::corpus::{load_dataset, DatasetManifest, RawDataset};
use hids_core::derive_seed;
use hids_core::metrics::{aggregate, evaluate_scores, roc_curve, GroupBy, MetricsReport, RocCurve};
use hids_core::models::{fit, sequences_to_features, ModelKind, ModelParams, ModelSpec};
use hids_core::preprocess::{
    run_pipeline, ClassLabel, PipelineConfig, PipelineOutcome, Provenance, SequencePool,
};
use hids_core::quality::{before_after, scorecard};
use hids_core::Scalar;

use crate::config::{slug, RunConfig, SCHEMA_VERSION};
use crate::csvio::{
    class_str, provenance_str, write_csv, AggregateCsvRow, BeforeAfterCsvRow, ErrorRow,
    HistogramRow, ReportRow, RocPointRow, ScorecardRow, AGGREGATES_CSV, BEFORE_AFTER_CSV,
    ERRORS_CSV, HISTOGRAM_CSV, MODELS_DIR, POOLS_DIR, REPORTS_CSV, ROC_POINTS_CSV, RUN_JSON,
    SCORECARDS_CSV, SUMMARY_MD,
};
use crate::CliError;

pub const PROVENANCES: [Provenance; 2] = [Provenance::Original, Provenance::Processed];

/// One dataset with both pipeline runs and cached feature matrices.
struct PreparedDataset {
    name: String,
    manifest_path: PathBuf,
    ds: RawDataset,
    config: PipelineConfig,
    /// Indexed by provenance: outcome plus features, or the error already
    /// recorded for it.
    runs: BTreeMap<&'static str, PreparedRun>,
}

struct PreparedRun {
    outcome: PipelineOutcome,
    train_xs: Vec<Vec<Scalar>>,
    train_ys: Vec<ClassLabel>,
    test_xs: Vec<Vec<Scalar>>,
    test_ys: Vec<ClassLabel>,
}

enum CellModel {
    Native(ModelKind),
    External(usize),
}

struct CellPlan {
    dataset: usize,
    provenance: Provenance,
    model: CellModel,
}

struct CellResult {
    report: Result<(MetricsReport, RocCurve), (String, String)>, // Err = (stage, message)
    model_json: Option<String>,
    model_name: String,
    params_json: String,
}

/// Everything a finished run produced, for tests and the summary writer.
pub struct ExperimentOutput {
    pub reports: Vec<ReportRow>,
    pub aggregates: Vec<AggregateCsvRow>,
    pub before_after_rows: Vec<BeforeAfterCsvRow>,
    pub scorecards: Vec<ScorecardRow>,
    pub histogram: Vec<HistogramRow>,
    pub roc_points: Vec<RocPointRow>,
    pub errors: Vec<ErrorRow>,
    /// Paths written, relative to the output directory.
    pub files: Vec<String>,
}

impl ExperimentOutput {
    pub fn failed_cells(&self) -> usize {
        self.errors.len()
    }
}

#[derive(Serialize)]
struct RunMeta<'a> {
    schema_version: u32,
    manifests: Vec<String>,
    models: Vec<&'a str>,
    external_models: Vec<&'a str>,
    external_timeout_secs: u64,
    save_models: bool,
    export_pools: bool,
    /// Effective pipeline knobs per dataset (defaults + manifest + flags).
    pipeline: BTreeMap<String, PipelineConfig>,
}

/// Runs the full experiment grid and writes every artifact into
/// `cfg.out_dir`. Returns the in-memory artifacts; callers decide the exit
/// code from `failed_cells()`.
pub fn run_experiment(cfg: &RunConfig) -> Result<ExperimentOutput, CliError> {
    cfg.validate()?;

    let mut errors: Vec<ErrorRow> = Vec::new();
    let mut prepared: Vec<PreparedDataset> = Vec::new();

    // Phase 1 (config): read manifests; failures here are usage errors.
    let mut manifests: Vec<(PathBuf, DatasetManifest)> = Vec::new();
    for path in &cfg.manifests {
        let manifest = DatasetManifest::from_path(path)
            .map_err(|e| CliError::Usage(format!("manifest {}: {e}", path.display())))?;
        let pipeline_cfg = cfg.effective_config(&manifest);
        pipeline_cfg
            .validate()
            .map_err(|e| CliError::Usage(format!("manifest {}: {e}", path.display())))?;
        if manifests.iter().any(|(_, m)| m.name == manifest.name) {
            return Err(CliError::Usage(format!(
                "dataset name {:?} appears in more than one manifest",
                manifest.name
            )));
        }
        manifests.push((path.clone(), manifest));
    }

    // Phase 2 (data): load traces and run the pipeline once per provenance.
    for (path, manifest) in manifests {
        let name = manifest.name.clone();
        let config = cfg.effective_config(&manifest);
        let ds = match load_dataset(&manifest) {
            Ok(ds) => ds,
            Err(e) => {
                errors.push(dataset_error(&name, "*", "load", &e.to_string()));
                continue;
            }
        };
        let mut runs = BTreeMap::new();
        for provenance in PROVENANCES {
            let run_cfg = PipelineConfig {
                dedup: provenance == Provenance::Processed,
                ..config.clone()
            };
            match run_pipeline(&ds, &run_cfg) {
                Ok(outcome) => {
                    let (train_xs, train_ys) =
                        sequences_to_features::<Scalar>(&outcome.split.train);
                    let (test_xs, test_ys) = sequences_to_features::<Scalar>(&outcome.split.test);
                    runs.insert(
                        provenance_str(provenance),
                        PreparedRun {
                            outcome,
                            train_xs,
                            train_ys,
                            test_xs,
                            test_ys,
                        },
                    );
                }
                Err(e) => {
                    errors.push(dataset_error(
                        &name,
                        provenance_str(provenance),
                        "pipeline",
                        &e.to_string(),
                    ));
                }
            }
        }
        prepared.push(PreparedDataset {
            name,
            manifest_path: path,
            ds,
            config,
            runs,
        });
    }

    // Phase 3 (cells): the full grid, in report order. Native models come
    // first in canonical order, then external models in flag order.
    let mut cells: Vec<CellPlan> = Vec::new();
    for (i, p) in prepared.iter().enumerate() {
        for provenance in PROVENANCES {
            if !p.runs.contains_key(provenance_str(provenance)) {
                continue; // pipeline failure already recorded
            }
            for kind in &cfg.models {
                cells.push(CellPlan {
                    dataset: i,
                    provenance,
                    model: CellModel::Native(*kind),
                });
            }
            for e in 0..cfg.external.len() {
                cells.push(CellPlan {
                    dataset: i,
                    provenance,
                    model: CellModel::External(e),
                });
            }
        }
    }
    let results: Vec<CellResult> = cells
        .par_iter()
        .map(|cell| run_cell(cfg, &prepared, cell))
        .collect();

    // Phase 4 (assembly): flatten into tables in deterministic order.
    let mut reports: Vec<MetricsReport> = Vec::new();
    let mut report_rows: Vec<ReportRow> = Vec::new();
    let mut roc_points: Vec<RocPointRow> = Vec::new();
    let mut model_files: Vec<(String, String)> = Vec::new(); // (relative path, json)
    for (cell, result) in cells.iter().zip(&results) {
        let p = &prepared[cell.dataset];
        match &result.report {
            Ok((report, curve)) => {
                report_rows.push(ReportRow::from_report(report, &result.params_json));
                for (point, threshold) in curve.points.iter().zip(&curve.thresholds) {
                    roc_points.push(RocPointRow {
                        dataset: p.name.clone(),
                        provenance: provenance_str(cell.provenance).to_string(),
                        model: result.model_name.clone(),
                        threshold: *threshold,
                        fpr: point.fpr,
                        tpr: point.tpr,
                    });
                }
                reports.push(report.clone());
                if let Some(json) = &result.model_json {
                    let file = format!(
                        "{MODELS_DIR}/{}__{}__{}.json",
                        slug(&p.name),
                        provenance_str(cell.provenance),
                        slug(&result.model_name),
                    );
                    model_files.push((file, json.clone()));
                }
            }
            Err((stage, message)) => {
                errors.push(ErrorRow {
                    dataset: p.name.clone(),
                    provenance: provenance_str(cell.provenance).to_string(),
                    model: result.model_name.clone(),
                    stage: stage.clone(),
                    message: message.clone(),
                });
            }
        }
    }

    // Quality scorecards come from the processed run (the cleaning pipeline).
    let mut scorecards: Vec<ScorecardRow> = Vec::new();
    for p in &prepared {
        let Some(run) = p.runs.get(provenance_str(Provenance::Processed)) else {
            continue;
        };
        match scorecard(
            &p.ds,
            &run.outcome.original,
            &run.outcome.processed,
            &run.outcome.split,
        ) {
            Ok(card) => scorecards.push(ScorecardRow::from_scorecard(&card)),
            Err(e) => errors.push(dataset_error(
                &p.name,
                "processed",
                "quality",
                &e.to_string(),
            )),
        }
    }

    // Histograms cover both pools of the processed run (it carries the
    // original pool too).
    let mut histogram: Vec<HistogramRow> = Vec::new();
    for p in &prepared {
        let Some(run) = p.runs.get(provenance_str(Provenance::Processed)) else {
            continue;
        };
        histogram.extend(histogram_rows(
            &p.name,
            Provenance::Original,
            &run.outcome.original,
        ));
        histogram.extend(histogram_rows(
            &p.name,
            Provenance::Processed,
            &run.outcome.processed,
        ));
    }

    let before_after_rows: Vec<BeforeAfterCsvRow> = if reports.is_empty() {
        Vec::new()
    } else {
        match before_after(&reports) {
            Ok(cmp) => cmp.rows.iter().map(BeforeAfterCsvRow::from_row).collect(),
            Err(e) => {
                errors.push(dataset_error("*", "*", "before_after", &e.to_string()));
                Vec::new()
            }
        }
    };

    let mut aggregates: Vec<AggregateCsvRow> = Vec::new();
    if !reports.is_empty() {
        for (group, by) in [
            ("model", GroupBy::Model),
            ("dataset", GroupBy::Dataset),
            ("provenance", GroupBy::Provenance),
        ] {
            let summary = aggregate(&reports, by);
            aggregates.extend(
                summary
                    .means
                    .iter()
                    .map(|r| AggregateCsvRow::from_row(group, r)),
            );
        }
    }

    // Phase 5 (writes): fixed order, cell-unique paths.
    let out = &cfg.out_dir;
    let mut files: Vec<String> = Vec::new();
    let mut write_table =
        |name: &str, write: &dyn Fn(&Path) -> Result<(), CliError>| -> Result<(), CliError> {
            write(&out.join(name))?;
            files.push(name.to_string());
            Ok(())
        };
    write_table(REPORTS_CSV, &|p| write_csv(p, &report_rows))?;
    write_table(AGGREGATES_CSV, &|p| write_csv(p, &aggregates))?;
    write_table(BEFORE_AFTER_CSV, &|p| write_csv(p, &before_after_rows))?;
    write_table(SCORECARDS_CSV, &|p| write_csv(p, &scorecards))?;
    write_table(HISTOGRAM_CSV, &|p| write_csv(p, &histogram))?;
    write_table(ROC_POINTS_CSV, &|p| write_csv(p, &roc_points))?;
    write_table(ERRORS_CSV, &|p| write_csv(p, &errors))?;

    if cfg.save_models && !model_files.is_empty() {
        create_dir(&out.join(MODELS_DIR))?;
        for (rel, json) in &model_files {
            write_text(&out.join(rel), json)?;
            files.push(rel.clone());
        }
    }
    if cfg.export_pools {
        create_dir(&out.join(POOLS_DIR))?;
        for p in &prepared {
            for provenance in PROVENANCES {
                let Some(run) = p.runs.get(provenance_str(provenance)) else {
                    continue;
                };
                let pool = match provenance {
                    Provenance::Original => &run.outcome.original,
                    Provenance::Processed => &run.outcome.processed,
                };
                let rel = format!(
                    "{POOLS_DIR}/{}__{}.csv",
                    slug(&p.name),
                    provenance_str(provenance)
                );
                write_pool_csv(&out.join(&rel), pool)?;
                files.push(rel);
            }
        }
    }

    let meta = RunMeta {
        schema_version: SCHEMA_VERSION,
        manifests: cfg
            .manifests
            .iter()
            .map(|p| p.display().to_string())
            .collect(),
        models: cfg.models.iter().map(|k| k.name()).collect(),
        external_models: cfg.external.iter().map(|e| e.name.as_str()).collect(),
        external_timeout_secs: cfg.external_timeout.as_secs(),
        save_models: cfg.save_models,
        export_pools: cfg.export_pools,
        pipeline: prepared
            .iter()
            .map(|p| (p.name.clone(), p.config.clone()))
            .collect(),
    };
    let meta_json = serde_json::to_string_pretty(&meta)
        .map_err(|e| CliError::Failure(format!("cannot serialize run metadata: {e}")))?;
    write_text(&out.join(RUN_JSON), &format!("{meta_json}\n"))?;
    files.push(RUN_JSON.to_string());

    let mut output = ExperimentOutput {
        reports: report_rows,
        aggregates,
        before_after_rows,
        scorecards,
        histogram,
        roc_points,
        errors,
        files,
    };
    output.files.push(SUMMARY_MD.to_string());
    output.files.sort();
    let summary = render_summary(cfg, &prepared, &output);
    write_text(&out.join(SUMMARY_MD), &summary)?;
    Ok(output)
}

fn dataset_error(dataset: &str, provenance: &str, stage: &str, message: &str) -> ErrorRow {
    ErrorRow {
        dataset: dataset.to_string(),
        provenance: provenance.to_string(),
        model: "*".to_string(),
        stage: stage.to_string(),
        message: message.to_string(),
    }
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::Failure(format!("cannot create {}: {e}", dir.display())))
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text)
        .map_err(|e| CliError::Failure(format!("cannot write {}: {e}", path.display())))
}

fn run_cell(cfg: &RunConfig, prepared: &[PreparedDataset], cell: &CellPlan) -> CellResult {
    let p = &prepared[cell.dataset];
    let run = &p.runs[provenance_str(cell.provenance)];
    match &cell.model {
        CellModel::Native(kind) => run_native_cell(p, run, cell.provenance, *kind, cfg.save_models),
        CellModel::External(idx) => {
            let entry = &cfg.external[*idx];
            let spec = ExternalModelSpec::new(&entry.command, cfg.external_timeout, &entry.name);
            let params_json = format!("{{\"command\":{}}}", json_string(&entry.command));
            let report = evaluate_external_cell(&spec, run, &p.name, cell.provenance);
            CellResult {
                report,
                model_json: None,
                model_name: entry.name.clone(),
                params_json,
            }
        }
    }
}

fn run_native_cell(
    p: &PreparedDataset,
    run: &PreparedRun,
    provenance: Provenance,
    kind: ModelKind,
    save_model: bool,
) -> CellResult {
    let params = ModelParams::defaults_for(kind);
    let params_json = serde_json::to_string(&params).unwrap_or_else(|_| "{}".to_string());
    let spec = ModelSpec {
        params,
        seed: derive_seed(run.outcome.split.seed, &format!("model/{}", kind.name())),
    };
    let fail = |stage: &str, message: String| CellResult {
        report: Err((stage.to_string(), message)),
        model_json: None,
        model_name: kind.name().to_string(),
        params_json: params_json.clone(),
    };

    let model = match fit(&spec, &run.train_xs, &run.train_ys) {
        Ok(m) => m,
        Err(e) => return fail("fit", e.to_string()),
    };
    let scores = match model.score(&run.test_xs) {
        Ok(s) => s,
        Err(e) => return fail("score", e.to_string()),
    };
    let report = match evaluate_scores(
        &run.test_ys,
        &scores,
        model.threshold(),
        kind.name(),
        &p.name,
        provenance,
    ) {
        Ok(r) => r,
        Err(e) => return fail("metrics", e.to_string()),
    };
    let curve = match roc_curve(&run.test_ys, &scores) {
        Ok(c) => c,
        Err(e) => return fail("metrics", e.to_string()),
    };
    let model_json = if save_model {
        let mut buf = Vec::new();
        match model.save_json(&mut buf) {
            Ok(()) => Some(String::from_utf8_lossy(&buf).into_owned()),
            Err(e) => return fail("save", e.to_string()),
        }
    } else {
        None
    };
    CellResult {
        report: Ok((report, curve)),
        model_json,
        model_name: kind.name().to_string(),
        params_json,
    }
}

fn evaluate_external_cell(
    spec: &ExternalModelSpec,
    run: &PreparedRun,
    dataset: &str,
    provenance: Provenance,
) -> Result<(MetricsReport, RocCurve), (String, String)> {
    let test_seqs: Vec<Vec<u32>> = run
        .outcome
        .split
        .test
        .iter()
        .map(|s| s.seq.clone())
        .collect();
    let scores = run_protocol(spec, &run.outcome.split.train, &test_seqs)
        .map_err(|e| ("external".to_string(), e.to_string()))?;
    let report = evaluate_scores(
        &run.test_ys,
        &scores,
        EXTERNAL_THRESHOLD,
        &spec.name,
        dataset,
        provenance,
    )
    .map_err(|e| ("metrics".to_string(), e.to_string()))?;
    let curve =
        roc_curve(&run.test_ys, &scores).map_err(|e| ("metrics".to_string(), e.to_string()))?;
    Ok((report, curve))
}

fn histogram_rows(dataset: &str, provenance: Provenance, pool: &SequencePool) -> Vec<HistogramRow> {
    let mut rows = Vec::new();
    for class in ClassLabel::ALL {
        let mut counts: BTreeMap<u32, usize> = BTreeMap::new();
        for s in pool.of_class(class) {
            for &v in &s.seq {
                *counts.entry(v).or_default() += 1;
            }
        }
        rows.extend(counts.into_iter().map(|(syscall, count)| HistogramRow {
            dataset: dataset.to_string(),
            provenance: provenance_str(provenance).to_string(),
            class: class_str(class).to_string(),
            syscall,
            count,
        }));
    }
    rows
}

/// Writes one pool as CSV: `s1..sn` syscall columns plus a `label` column
/// (0 = normal, 1 = intrusion).
fn write_pool_csv(path: &Path, pool: &SequencePool) -> Result<(), CliError> {
    let file = std::fs::File::create(path)
        .map_err(|e| CliError::Failure(format!("cannot create {}: {e}", path.display())))?;
    let mut w = csv::Writer::from_writer(std::io::BufWriter::new(file));
    let n = pool.sequences.first().map_or(0, |s| s.seq.len());
    let mut header: Vec<String> = (1..=n).map(|i| format!("s{i}")).collect();
    header.push("label".to_string());
    w.write_record(&header)
        .map_err(|e| CliError::Failure(format!("cannot write {}: {e}", path.display())))?;
    for s in &pool.sequences {
        let mut record: Vec<String> = s.seq.iter().map(|v| v.to_string()).collect();
        record.push((s.label.as_u8()).to_string());
        w.write_record(&record)
            .map_err(|e| CliError::Failure(format!("cannot write {}: {e}", path.display())))?;
    }
    w.flush()
        .map_err(|e| CliError::Failure(format!("cannot flush {}: {e}", path.display())))?;
    Ok(())
}

/// JSON string literal with escaping (for the tiny external-params object).
fn json_string(s: &str) -> String {
    serde_json::to_string(s).unwrap_or_else(|_| "\"\"".to_string())
}

/// Renders `summary.md` (layout v1). Everything comes from already-assembled
/// tables with fixed-precision formatting, so the document is deterministic.
fn render_summary(cfg: &RunConfig, prepared: &[PreparedDataset], out: &ExperimentOutput) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# Batch experiment summary\n");
    let _ = writeln!(
        s,
        "Document layout v{SCHEMA_VERSION}. Numbers below are rounded for reading; \
         full precision lives in the CSV artifacts listed at the end.\n"
    );

    let _ = writeln!(s, "## Run configuration\n");
    for p in prepared {
        let c = &p.config;
        let _ = writeln!(
            s,
            "- dataset `{}` (manifest `{}`): n={}, stride={}, balance={}, ratio={}, seed={}",
            p.name,
            p.manifest_path.display(),
            c.n,
            c.stride,
            match c.balance {
                hids_core::preprocess::BalancePolicy::BootstrapToMax => "bootstrap_to_max",
                hids_core::preprocess::BalancePolicy::None => "none",
            },
            c.ratio,
            c.seed,
        );
    }
    let models: Vec<&str> = cfg.models.iter().map(|k| k.name()).collect();
    let _ = writeln!(s, "- models: {}", join_or_none(&models));
    let externals: Vec<&str> = cfg.external.iter().map(|e| e.name.as_str()).collect();
    let _ = writeln!(s, "- external models: {}", join_or_none(&externals));
    let _ = writeln!(
        s,
        "- provenances: original (cross-class de-duplication off), processed (on)\n"
    );

    if !cfg.models.is_empty() {
        let _ = writeln!(s, "## Model hyperparameters\n");
        let _ = writeln!(s, "| model | parameters |");
        let _ = writeln!(s, "|---|---|");
        for kind in &cfg.models {
            let params = ModelParams::defaults_for(*kind);
            let json = serde_json::to_string(&params).unwrap_or_else(|_| "{}".to_string());
            let _ = writeln!(s, "| {} | `{}` |", kind.name(), json);
        }
        let _ = writeln!(s);
    }

    let _ = writeln!(s, "## Results ({} rows)\n", out.reports.len());
    if out.reports.is_empty() {
        let _ = writeln!(s, "No cells finished; see the errors section.\n");
    } else {
        let _ = writeln!(
            s,
            "| dataset | provenance | model | accuracy | precision | recall | fpr | macro F1 | AUC | log10(recall/fpr) |"
        );
        let _ = writeln!(s, "|---|---|---|---|---|---|---|---|---|---|");
        for r in &out.reports {
            let _ = writeln!(
                s,
                "| {} | {} | {} | {:.4} | {:.4} | {:.4} | {:.4} | {:.4} | {:.4} | {:.4} |",
                r.dataset,
                r.provenance,
                r.model,
                r.accuracy,
                r.precision,
                r.recall,
                r.fpr,
                r.macro_f1,
                r.auc,
                r.log_ratio,
            );
        }
        let _ = writeln!(s);
    }

    let model_rows: Vec<&AggregateCsvRow> = out
        .aggregates
        .iter()
        .filter(|r| r.group == "model")
        .collect();
    if !model_rows.is_empty() {
        let _ = writeln!(s, "## Mean rates by model\n");
        let _ = writeln!(
            s,
            "| model | cells | recall | fpr | AUC | log10(recall/fpr) |"
        );
        let _ = writeln!(s, "|---|---|---|---|---|---|");
        for r in model_rows {
            let _ = writeln!(
                s,
                "| {} | {} | {:.4} | {:.4} | {:.4} | {:.4} |",
                r.key, r.count, r.recall, r.fpr, r.auc, r.log_ratio,
            );
        }
        let _ = writeln!(s);
    }

    if !out.before_after_rows.is_empty() {
        let _ = writeln!(s, "## Original vs processed (model-averaged)\n");
        let _ = writeln!(
            s,
            "| dataset | recall orig | recall proc | fpr orig | fpr proc | fpr times higher | recall ratio |"
        );
        let _ = writeln!(s, "|---|---|---|---|---|---|---|");
        for r in &out.before_after_rows {
            let _ = writeln!(
                s,
                "| {} | {:.4} | {:.4} | {:.4} | {:.4} | {:.2} | {:.2} |",
                r.dataset,
                r.avg_recall_original,
                r.avg_recall_processed,
                r.avg_fpr_original,
                r.avg_fpr_processed,
                r.fpr_ratio,
                r.recall_ratio,
            );
        }
        let _ = writeln!(s);
    }

    if !out.scorecards.is_empty() {
        let _ = writeln!(s, "## Data quality scorecards\n");
        for c in &out.scorecards {
            let _ = writeln!(s, "### {}\n", c.dataset);
            let _ = writeln!(
                s,
                "- duplication rate (grams): normal {:.4}, intrusion {:.4}",
                c.duplication_rate_normal, c.duplication_rate_intrusion
            );
            let _ = writeln!(
                s,
                "- duplication rate (traces): normal {:.4}, intrusion {:.4}",
                c.trace_duplication_normal, c.trace_duplication_intrusion
            );
            let _ = writeln!(
                s,
                "- cross-class overlap: original {:.4}, processed {:.4}",
                c.cross_class_overlap, c.cross_class_overlap_processed
            );
            let _ = writeln!(
                s,
                "- class balance: grams {:.4}, traces {:.4}",
                c.class_balance, c.trace_class_balance
            );
            let _ = writeln!(
                s,
                "- variety: {} distinct grams, vocabulary {}/{} ({:.4})",
                c.distinct_grams, c.observed_vocabulary, c.vocab_size, c.vocabulary_coverage
            );
            let _ = writeln!(s, "- consistency violations: {}", c.consistency_violations);
            let _ = writeln!(
                s,
                "- train/test value overlap: {:.4}",
                c.train_test_value_overlap
            );
            let _ = writeln!(
                s,
                "- declared: reputation={}, relevance={}, timeliness={}, context={}",
                c.reputation, c.relevance, c.timeliness, c.context
            );
            let _ = writeln!(s);
        }
    }

    let _ = writeln!(s, "## Errors\n");
    if out.errors.is_empty() {
        let _ = writeln!(s, "none\n");
    } else {
        let _ = writeln!(s, "| dataset | provenance | model | stage | message |");
        let _ = writeln!(s, "|---|---|---|---|---|");
        for e in &out.errors {
            let _ = writeln!(
                s,
                "| {} | {} | {} | {} | {} |",
                e.dataset,
                e.provenance,
                e.model,
                e.stage,
                e.message.replace('|', "\\|").replace('\n', " "),
            );
        }
        let _ = writeln!(s);
    }

    let _ = writeln!(s, "## Artifacts\n");
    for f in &out.files {
        let _ = writeln!(s, "- `{f}`");
    }
    s
}

fn join_or_none(items: &[&str]) -> String {
    if items.is_empty() {
        "none".to_string()
    } else {
        items.join(", ")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::PipelineOverrides;
    use hids_core::synth::{write_corpus, SynthSpec};
    use std::time::Duration;

    fn tiny_corpus(dir: &Path) -> PathBuf {
        let spec =
            SynthSpec::with_signature_overlap("tiny", 30, 40, (8, 12), 0.2, Default::default(), 11)
                .unwrap();
        let ds = hids_core::synth::generate(&spec).unwrap();
        write_corpus(&ds, &dir.join("tiny")).unwrap()
    }

    fn run_config(manifest: PathBuf, out_dir: PathBuf, models: Vec<ModelKind>) -> RunConfig {
        RunConfig {
            manifests: vec![manifest],
            models,
            external: vec![],
            external_timeout: Duration::from_secs(30),
            out_dir,
            overrides: PipelineOverrides::default(),
            save_models: false,
            export_pools: false,
        }
    }

    #[test]
    fn experiment_produces_one_row_per_cell_and_no_errors() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = tiny_corpus(dir.path());
        let cfg = run_config(
            manifest,
            dir.path().join("out"),
            vec![ModelKind::DTree, ModelKind::Gnb],
        );
        let out = run_experiment(&cfg).unwrap();
        assert_eq!(out.errors, vec![]);
        // 1 dataset × 2 provenances × 2 models.
        assert_eq!(out.reports.len(), 4);
        assert_eq!(out.before_after_rows.len(), 1);
        assert_eq!(out.scorecards.len(), 1);
        assert!(!out.histogram.is_empty());
        assert!(!out.roc_points.is_empty());
        // model aggregate rows: 2 models + 1 dataset + 2 provenances.
        assert_eq!(out.aggregates.len(), 5);
        for name in [
            REPORTS_CSV,
            AGGREGATES_CSV,
            BEFORE_AFTER_CSV,
            SCORECARDS_CSV,
            HISTOGRAM_CSV,
            ROC_POINTS_CSV,
            ERRORS_CSV,
            RUN_JSON,
            SUMMARY_MD,
        ] {
            assert!(cfg.out_dir.join(name).is_file(), "{name} missing");
        }
    }

    #[test]
    fn same_config_twice_is_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = tiny_corpus(dir.path());
        let mut all_bytes = Vec::new();
        for run in ["a", "b"] {
            let cfg = run_config(
                manifest.clone(),
                dir.path().join(run),
                vec![ModelKind::DTree, ModelKind::Knn],
            );
            let out = run_experiment(&cfg).unwrap();
            let mut bytes = Vec::new();
            for f in &out.files {
                bytes.extend_from_slice(&std::fs::read(cfg.out_dir.join(f)).unwrap());
            }
            all_bytes.push(bytes);
        }
        assert_eq!(all_bytes[0], all_bytes[1]);
    }

    #[test]
    fn missing_traces_become_error_rows_not_aborts() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = tiny_corpus(dir.path());
        // Corrupt the corpus: drop one class's files.
        for entry in std::fs::read_dir(dir.path().join("tiny")).unwrap() {
            let path = entry.unwrap().path();
            if path
                .file_name()
                .unwrap()
                .to_string_lossy()
                .starts_with("intrusion")
            {
                std::fs::remove_file(path).unwrap();
            }
        }
        let cfg = run_config(manifest, dir.path().join("out"), vec![ModelKind::DTree]);
        let out = run_experiment(&cfg).unwrap();
        assert!(out.reports.is_empty());
        assert!(!out.errors.is_empty());
        assert_eq!(out.errors[0].stage, "load");
        assert!(out.failed_cells() > 0);
        // Artifacts still written (empty tables with headers).
        assert!(cfg.out_dir.join(REPORTS_CSV).is_file());
        assert!(cfg.out_dir.join(SUMMARY_MD).is_file());
    }

    #[test]
    fn save_models_and_export_pools_write_cell_unique_files() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = tiny_corpus(dir.path());
        let mut cfg = run_config(manifest, dir.path().join("out"), vec![ModelKind::Gnb]);
        cfg.save_models = true;
        cfg.export_pools = true;
        let out = run_experiment(&cfg).unwrap();
        assert_eq!(out.errors, vec![]);
        let models: Vec<&String> = out
            .files
            .iter()
            .filter(|f| f.starts_with(MODELS_DIR))
            .collect();
        assert_eq!(models.len(), 2); // gnb × 2 provenances
        let pools: Vec<&String> = out
            .files
            .iter()
            .filter(|f| f.starts_with(POOLS_DIR))
            .collect();
        assert_eq!(pools.len(), 2);
        for f in models.iter().chain(&pools) {
            assert!(cfg.out_dir.join(f).is_file(), "{f} missing");
        }
        // Saved models reload.
        let json = std::fs::read(cfg.out_dir.join(models[0])).unwrap();
        let model: hids_core::models::FittedModel<Scalar> =
            hids_core::models::FittedModel::load_json(&json[..]).unwrap();
        assert_eq!(model.kind(), ModelKind::Gnb);
    }
}
