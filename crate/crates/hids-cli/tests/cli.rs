//! End-to-end tests of the `hids` binary: real subprocesses, real files.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_hids");
const LOOKUP_BIN: &str = env!("CARGO_BIN_EXE_hids-lookup-model");

fn run(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(BIN);
    cmd.args(args);
    // Keep the ambient output-dir override out of every test.
    cmd.env_remove("HIDS_OUTPUT_DIR");
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("hids binary runs")
}

fn stdout_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// Writes a generator config and materializes the corpus; returns the
/// manifest path printed by `hids synth`.
fn make_corpus(dir: &Path, name: &str, overlap: f64, traces: usize, seed: u64) -> PathBuf {
    let config = dir.join(format!("{name}.toml"));
    std::fs::write(
        &config,
        format!(
            "name = \"{name}\"\nvocab_size = 20\ntraces_per_class = {traces}\n\
             trace_len = [9, 13]\nsignature_overlap = {overlap}\nseed = {seed}\n"
        ),
    )
    .expect("config written");
    let out = run(
        &[
            "synth",
            "--config",
            config.to_str().unwrap(),
            "--out",
            dir.join("corpora").to_str().unwrap(),
        ],
        &[],
    );
    assert!(out.status.success(), "synth failed: {}", stderr_of(&out));
    let manifest = stdout_of(&out)
        .lines()
        .next()
        .expect("synth prints the manifest path")
        .to_string();
    PathBuf::from(manifest)
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    let mut reader = csv::Reader::from_path(path).expect("csv opens");
    reader
        .records()
        .map(|r| r.expect("csv row").iter().map(str::to_string).collect())
        .collect()
}

fn read_tree(dir: &Path) -> Vec<(String, Vec<u8>)> {
    fn walk(root: &Path, at: &Path, out: &mut Vec<(String, Vec<u8>)>) {
        for entry in std::fs::read_dir(at).expect("readable dir") {
            let path = entry.expect("entry").path();
            if path.is_dir() {
                walk(root, &path, out);
            } else {
                out.push((
                    path.strip_prefix(root)
                        .unwrap()
                        .to_string_lossy()
                        .into_owned(),
                    std::fs::read(&path).expect("readable file"),
                ));
            }
        }
    }
    let mut out = Vec::new();
    walk(dir, dir, &mut out);
    out.sort_by(|a, b| a.0.cmp(&b.0));
    out
}

#[test]
fn pipeline_grid_yields_one_row_per_model_and_provenance() {
    let tmp = tempfile::tempdir().unwrap();
    let manifest = make_corpus(tmp.path(), "grid", 0.4, 40, 3);
    let out_dir = tmp.path().join("run");
    let out = run(
        &[
            "pipeline",
            "--manifest",
            manifest.to_str().unwrap(),
            "--models",
            "all",
            "--out",
            out_dir.to_str().unwrap(),
        ],
        &[],
    );
    assert!(out.status.success(), "pipeline failed: {}", stderr_of(&out));

    let rows = csv_rows(&out_dir.join("reports.csv"));
    assert_eq!(rows.len(), 16, "8 models × 2 provenances");
    let models: std::collections::BTreeSet<&str> = rows.iter().map(|r| r[2].as_str()).collect();
    assert_eq!(models.len(), 8, "every model family reported: {models:?}");
    assert_eq!(csv_rows(&out_dir.join("errors.csv")).len(), 0);
    for artifact in [
        "reports.csv",
        "aggregates.csv",
        "before_after.csv",
        "scorecards.csv",
        "histogram.csv",
        "roc_points.csv",
        "errors.csv",
        "run.json",
        "summary.md",
    ] {
        assert!(out_dir.join(artifact).is_file(), "{artifact} missing");
    }
}

#[test]
fn same_invocation_twice_is_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let manifest = make_corpus(tmp.path(), "det", 0.4, 30, 5);
    let run_once = |dir: &Path| {
        let out = run(
            &[
                "pipeline",
                "--manifest",
                manifest.to_str().unwrap(),
                "--models",
                "gnb,dtree,knn",
                "--out",
                dir.to_str().unwrap(),
            ],
            &[],
        );
        assert!(out.status.success(), "pipeline failed: {}", stderr_of(&out));
    };
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    run_once(&a);
    run_once(&b);
    assert_eq!(read_tree(&a), read_tree(&b), "artifact bytes differ");
}

#[test]
fn figures_carry_values_from_the_csv_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let manifest = make_corpus(tmp.path(), "figs", 0.5, 40, 9);
    let out_dir = tmp.path().join("run");
    let out = run(
        &[
            "report",
            "--manifest",
            manifest.to_str().unwrap(),
            "--models",
            "knn,gnb",
            "--out",
            out_dir.to_str().unwrap(),
        ],
        &[],
    );
    assert!(out.status.success(), "report failed: {}", stderr_of(&out));

    // ROC legend AUC must equal the reports.csv AUC to 3 decimals.
    let reports = csv_rows(&out_dir.join("reports.csv"));
    let roc_svg = std::fs::read_to_string(out_dir.join("figures").join("roc__figs__processed.svg"))
        .expect("roc figure exists");
    for row in reports.iter().filter(|r| r[1] == "processed") {
        let (model, auc) = (&row[2], row[8].parse::<f64>().unwrap());
        let legend = format!("{model} ({auc:.3})");
        assert!(roc_svg.contains(&legend), "missing legend entry {legend:?}");
    }

    // Bar labels must equal the before_after.csv rates to 2 decimals.
    let bars_svg = std::fs::read_to_string(out_dir.join("figures").join("bars.svg"))
        .expect("bars figure exists");
    let ba = &csv_rows(&out_dir.join("before_after.csv"))[0];
    // Columns 1..=4: avg recall original/processed, avg fpr original/processed.
    for cell in &ba[1..=4] {
        let label = format!(">{:.2}<", cell.parse::<f64>().unwrap());
        assert!(bars_svg.contains(&label), "missing bar label {label:?}");
    }

    // Standalone figure subcommands re-render identical files from the CSVs.
    let hist_path = out_dir
        .join("figures")
        .join("histogram__figs__original.svg");
    let before = std::fs::read(&hist_path).expect("histogram exists");
    std::fs::remove_file(&hist_path).unwrap();
    let out = run(&["histogram", "--run", out_dir.to_str().unwrap()], &[]);
    assert!(
        out.status.success(),
        "histogram failed: {}",
        stderr_of(&out)
    );
    assert_eq!(std::fs::read(&hist_path).unwrap(), before);
}

#[test]
fn unknown_model_is_a_usage_error_before_any_work() {
    let tmp = tempfile::tempdir().unwrap();
    let manifest = make_corpus(tmp.path(), "usage", 0.4, 30, 2);
    let out_dir = tmp.path().join("run");
    let out = run(
        &[
            "pipeline",
            "--manifest",
            manifest.to_str().unwrap(),
            "--models",
            "gnb,nosuch",
            "--out",
            out_dir.to_str().unwrap(),
        ],
        &[],
    );
    assert_eq!(out.status.code(), Some(2), "usage errors exit 2");
    assert!(stderr_of(&out).contains("unknown model"));
    assert!(
        !out_dir.join("reports.csv").exists(),
        "no artifacts may be written on a usage error"
    );
}

#[test]
fn missing_dataset_is_a_runtime_failure_with_error_rows() {
    let tmp = tempfile::tempdir().unwrap();
    let manifest = make_corpus(tmp.path(), "broken", 0.4, 30, 4);
    // Break the corpus after manifest creation: drop one class's files.
    let corpus_dir = manifest.parent().unwrap();
    for entry in std::fs::read_dir(corpus_dir).unwrap() {
        let path = entry.unwrap().path();
        if path
            .file_name()
            .is_some_and(|n| n.to_string_lossy().starts_with("intrusion"))
        {
            std::fs::remove_file(path).unwrap();
        }
    }
    let out_dir = tmp.path().join("run");
    let out = run(
        &[
            "pipeline",
            "--manifest",
            manifest.to_str().unwrap(),
            "--models",
            "gnb",
            "--out",
            out_dir.to_str().unwrap(),
        ],
        &[],
    );
    assert_eq!(out.status.code(), Some(1), "cell failures exit 1");
    let errors = csv_rows(&out_dir.join("errors.csv"));
    assert!(!errors.is_empty(), "failure must be recorded in errors.csv");
    assert_eq!(errors[0][3], "load");
}

#[test]
fn output_dir_env_var_is_honored_when_flag_is_absent() {
    let tmp = tempfile::tempdir().unwrap();
    let manifest = make_corpus(tmp.path(), "envdir", 0.4, 30, 6);
    let out_dir = tmp.path().join("from-env");
    let out = run(
        &[
            "pipeline",
            "--manifest",
            manifest.to_str().unwrap(),
            "--models",
            "gnb",
        ],
        &[("HIDS_OUTPUT_DIR", out_dir.to_str().unwrap())],
    );
    assert!(out.status.success(), "pipeline failed: {}", stderr_of(&out));
    assert!(out_dir.join("reports.csv").is_file());
}

#[test]
fn ingest_validate_prints_a_report() {
    let tmp = tempfile::tempdir().unwrap();
    let manifest = make_corpus(tmp.path(), "ingest", 0.4, 30, 8);
    let out = run(
        &["ingest-validate", "--manifest", manifest.to_str().unwrap()],
        &[],
    );
    assert!(out.status.success());
    let text = stdout_of(&out);
    assert!(text.contains("dataset: ingest"));
    assert!(text.contains("out-of-range syscalls: 0"));
}

#[test]
fn adapter_check_passes_the_lookup_model_and_fails_a_truncating_one() {
    let ok = run(&["adapter-check", "--command", LOOKUP_BIN], &[]);
    assert!(ok.status.success(), "conforming model must pass");
    assert!(stdout_of(&ok).contains("verdict: conforming"));

    let bad = run(
        &[
            "adapter-check",
            "--command",
            &format!("{LOOKUP_BIN} --misbehave=truncate"),
        ],
        &[],
    );
    assert_eq!(bad.status.code(), Some(1));
    assert!(stderr_of(&bad).contains("not conforming"));
}

#[test]
fn external_model_joins_the_report_grid() {
    let tmp = tempfile::tempdir().unwrap();
    let manifest = make_corpus(tmp.path(), "ext", 0.4, 30, 10);
    let out_dir = tmp.path().join("run");
    let out = run(
        &[
            "pipeline",
            "--manifest",
            manifest.to_str().unwrap(),
            "--models",
            "gnb",
            "--external",
            &format!("lookup={LOOKUP_BIN}"),
            "--out",
            out_dir.to_str().unwrap(),
        ],
        &[],
    );
    assert!(out.status.success(), "pipeline failed: {}", stderr_of(&out));
    let rows = csv_rows(&out_dir.join("reports.csv"));
    assert_eq!(rows.len(), 4, "(gnb + lookup) × 2 provenances");
    assert!(rows.iter().any(|r| r[2] == "lookup"));
}
