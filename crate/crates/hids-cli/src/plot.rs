//! Self-contained SVG figure emitters.
//!
//! Three figure types: overlaid per-syscall class histograms, multi-series
//! ROC curves with AUC legends, and clustered recall/FPR bars contrasting the
//! original and processed provenances. Emitters consume rows re-read from the
//! run's CSV files, so every plotted number equals a CSV value; no rendering
//! library or external font is involved.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::config::slug;
use crate::csvio::{
    read_csv, BeforeAfterCsvRow, HistogramRow, ReportRow, RocPointRow, BEFORE_AFTER_CSV,
    FIGURES_DIR, HISTOGRAM_CSV, REPORTS_CSV, ROC_POINTS_CSV,
};
use crate::CliError;

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 500.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 24.0;
const MARGIN_T: f64 = 44.0;
const MARGIN_B: f64 = 58.0;

const PALETTE: [&str; 10] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf", "#7f7f7f",
    "#bcbd22", "#e377c2",
];
const NORMAL_COLOR: &str = "#1f77b4";
const INTRUSION_COLOR: &str = "#d62728";

/// Minimal SVG assembly with fixed numeric formatting (two decimals), so
/// output bytes are deterministic.
struct Svg {
    buf: String,
}

impl Svg {
    fn new(width: f64, height: f64) -> Self {
        let mut buf = String::new();
        let _ = writeln!(buf, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
        let _ = writeln!(
            buf,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}">"#
        );
        let _ = writeln!(
            buf,
            r#"<rect x="0" y="0" width="{width:.0}" height="{height:.0}" fill="white"/>"#
        );
        Svg { buf }
    }

    fn finish(mut self) -> String {
        self.buf.push_str("</svg>\n");
        self.buf
    }

    #[allow(clippy::too_many_arguments)]
    fn line(&mut self, x1: f64, y1: f64, x2: f64, y2: f64, stroke: &str, width: f64, dash: &str) {
        let dash_attr = if dash.is_empty() {
            String::new()
        } else {
            format!(r#" stroke-dasharray="{dash}""#)
        };
        let _ = writeln!(
            self.buf,
            r#"<line x1="{x1:.2}" y1="{y1:.2}" x2="{x2:.2}" y2="{y2:.2}" stroke="{stroke}" stroke-width="{width}"{dash_attr}/>"#
        );
    }

    fn rect(&mut self, x: f64, y: f64, w: f64, h: f64, fill: &str, opacity: f64) {
        let _ = writeln!(
            self.buf,
            r#"<rect x="{x:.2}" y="{y:.2}" width="{w:.2}" height="{h:.2}" fill="{fill}" fill-opacity="{opacity}"/>"#
        );
    }

    fn polyline(&mut self, points: &[(f64, f64)], stroke: &str, width: f64) {
        let mut attr = String::new();
        for (x, y) in points {
            let _ = write!(attr, "{x:.2},{y:.2} ");
        }
        let _ = writeln!(
            self.buf,
            r#"<polyline points="{}" fill="none" stroke="{stroke}" stroke-width="{width}"/>"#,
            attr.trim_end()
        );
    }

    fn text(&mut self, x: f64, y: f64, size: f64, anchor: &str, content: &str, extra: &str) {
        let _ = writeln!(
            self.buf,
            r#"<text x="{x:.2}" y="{y:.2}" font-family="sans-serif" font-size="{size}" text-anchor="{anchor}"{extra}>{}</text>"#,
            escape(content)
        );
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// Rounds `max` up to a friendly axis ceiling (1/2/5 × 10^k grid).
fn nice_ceiling(max: f64) -> f64 {
    if max <= 0.0 {
        return 1.0;
    }
    let exp = max.log10().floor();
    let base = 10f64.powf(exp);
    for m in [1.0, 2.0, 5.0, 10.0] {
        if m * base >= max {
            return m * base;
        }
    }
    10.0 * base
}

/// Formats a tick label: integers plainly, fractions with the needed
/// precision.
fn tick_label(v: f64) -> String {
    if (v - v.round()).abs() < 1e-9 {
        format!("{}", v.round() as i64)
    } else {
        format!("{v}")
    }
}

struct Frame {
    x0: f64,
    y0: f64,
    w: f64,
    h: f64,
}

impl Frame {
    fn standard() -> Self {
        Frame {
            x0: MARGIN_L,
            y0: MARGIN_T,
            w: WIDTH - MARGIN_L - MARGIN_R,
            h: HEIGHT - MARGIN_T - MARGIN_B,
        }
    }

    fn x(&self, frac: f64) -> f64 {
        self.x0 + frac * self.w
    }

    fn y(&self, frac: f64) -> f64 {
        self.y0 + (1.0 - frac) * self.h
    }

    fn draw_box(&self, svg: &mut Svg) {
        svg.line(
            self.x0,
            self.y0,
            self.x0,
            self.y0 + self.h,
            "black",
            1.0,
            "",
        );
        svg.line(
            self.x0,
            self.y0 + self.h,
            self.x0 + self.w,
            self.y0 + self.h,
            "black",
            1.0,
            "",
        );
    }
}

/// Overlaid per-syscall frequency histogram for one (dataset, provenance).
/// Errors when the row set is empty (nothing to plot means an empty pool).
pub fn histogram_svg(
    dataset: &str,
    provenance: &str,
    rows: &[HistogramRow],
) -> Result<String, CliError> {
    if rows.is_empty() {
        return Err(CliError::Failure(format!(
            "no histogram rows for dataset {dataset:?} provenance {provenance:?}: empty pool"
        )));
    }
    let min_id = rows.iter().map(|r| r.syscall).min().unwrap_or(0) as f64;
    let max_id = rows.iter().map(|r| r.syscall).max().unwrap_or(0) as f64;
    let span = (max_id - min_id + 1.0).max(1.0);
    let y_max = nice_ceiling(rows.iter().map(|r| r.count).max().unwrap_or(1) as f64);

    let mut svg = Svg::new(WIDTH, HEIGHT);
    let frame = Frame::standard();
    let title = format!("Per-syscall frequency: {dataset} ({provenance})");
    svg.text(WIDTH / 2.0, 26.0, 16.0, "middle", &title, "");

    // Y grid and ticks.
    for i in 0..=5 {
        let v = y_max * f64::from(i) / 5.0;
        let y = frame.y(v / y_max);
        svg.line(frame.x0, y, frame.x0 + frame.w, y, "#dddddd", 1.0, "");
        svg.text(frame.x0 - 8.0, y + 4.0, 11.0, "end", &tick_label(v), "");
    }
    // X ticks on a coarse grid of syscall ids.
    let step = nice_ceiling(span / 10.0).max(1.0);
    let mut tick = (min_id / step).floor() * step;
    while tick <= max_id {
        if tick >= min_id {
            let x = frame.x((tick - min_id + 0.5) / span);
            svg.line(
                x,
                frame.y0 + frame.h,
                x,
                frame.y0 + frame.h + 5.0,
                "black",
                1.0,
                "",
            );
            svg.text(
                x,
                frame.y0 + frame.h + 18.0,
                11.0,
                "middle",
                &tick_label(tick),
                "",
            );
        }
        tick += step;
    }

    let bar_w = frame.w / span;
    for (class, color) in [("normal", NORMAL_COLOR), ("intrusion", INTRUSION_COLOR)] {
        for r in rows.iter().filter(|r| r.class == class) {
            let x = frame.x((f64::from(r.syscall) - min_id) / span);
            let h = (r.count as f64 / y_max) * frame.h;
            svg.rect(x, frame.y0 + frame.h - h, bar_w, h, color, 0.55);
        }
    }
    frame.draw_box(&mut svg);

    // Legend.
    let lx = frame.x0 + frame.w - 150.0;
    for (i, (label, color)) in [("normal", NORMAL_COLOR), ("intrusion", INTRUSION_COLOR)]
        .iter()
        .enumerate()
    {
        let y = frame.y0 + 12.0 + 18.0 * i as f64;
        svg.rect(lx, y - 9.0, 12.0, 12.0, color, 1.0);
        svg.text(lx + 18.0, y + 2.0, 12.0, "start", label, "");
    }

    svg.text(
        frame.x0 + frame.w / 2.0,
        HEIGHT - 16.0,
        13.0,
        "middle",
        "syscall id",
        "",
    );
    svg.text(
        18.0,
        frame.y0 + frame.h / 2.0,
        13.0,
        "middle",
        "occurrences",
        &format!(
            r#" transform="rotate(-90 18 {:.2})""#,
            frame.y0 + frame.h / 2.0
        ),
    );
    Ok(svg.finish())
}

/// One model's curve in a ROC figure.
pub struct RocSeries {
    pub model: String,
    pub auc: f64,
    pub points: Vec<(f64, f64)>,
}

/// Multi-series ROC plot for one (dataset, provenance); legend carries each
/// model's AUC to three decimals.
pub fn roc_svg(dataset: &str, provenance: &str, series: &[RocSeries]) -> Result<String, CliError> {
    if series.is_empty() {
        return Err(CliError::Failure(format!(
            "no ROC series for dataset {dataset:?} provenance {provenance:?}"
        )));
    }
    let mut svg = Svg::new(WIDTH, HEIGHT);

    // Square plotting region.
    let side = HEIGHT - MARGIN_T - MARGIN_B;
    let frame = Frame {
        x0: MARGIN_L,
        y0: MARGIN_T,
        w: side,
        h: side,
    };
    let title = format!("ROC: {dataset} ({provenance})");
    svg.text(MARGIN_L + side / 2.0, 26.0, 16.0, "middle", &title, "");

    for i in 0..=5 {
        let v = f64::from(i) / 5.0;
        let x = frame.x(v);
        let y = frame.y(v);
        svg.line(frame.x0, y, frame.x0 + frame.w, y, "#dddddd", 1.0, "");
        svg.line(x, frame.y0, x, frame.y0 + frame.h, "#dddddd", 1.0, "");
        svg.text(frame.x0 - 8.0, y + 4.0, 11.0, "end", &format!("{v:.1}"), "");
        svg.text(
            x,
            frame.y0 + frame.h + 18.0,
            11.0,
            "middle",
            &format!("{v:.1}"),
            "",
        );
    }
    // Chance diagonal.
    svg.line(
        frame.x(0.0),
        frame.y(0.0),
        frame.x(1.0),
        frame.y(1.0),
        "#999999",
        1.0,
        "4 4",
    );

    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let pts: Vec<(f64, f64)> = s
            .points
            .iter()
            .map(|&(fpr, tpr)| (frame.x(fpr), frame.y(tpr)))
            .collect();
        svg.polyline(&pts, color, 1.8);
    }
    frame.draw_box(&mut svg);

    // Legend to the right of the square.
    let lx = frame.x0 + frame.w + 28.0;
    svg.text(lx, frame.y0 + 4.0, 12.0, "start", "model (AUC)", "");
    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let y = frame.y0 + 24.0 + 18.0 * i as f64;
        svg.rect(lx, y - 9.0, 12.0, 12.0, color, 1.0);
        svg.text(
            lx + 18.0,
            y + 2.0,
            12.0,
            "start",
            &format!("{} ({:.3})", s.model, s.auc),
            "",
        );
    }

    svg.text(
        frame.x0 + frame.w / 2.0,
        HEIGHT - 16.0,
        13.0,
        "middle",
        "false positive rate",
        "",
    );
    svg.text(
        18.0,
        frame.y0 + frame.h / 2.0,
        13.0,
        "middle",
        "true positive rate",
        &format!(
            r#" transform="rotate(-90 18 {:.2})""#,
            frame.y0 + frame.h / 2.0
        ),
    );
    Ok(svg.finish())
}

/// Clustered per-dataset bars: average recall and FPR for both provenances,
/// four bars per dataset, datasets ordered by descending original-provenance
/// average FPR. Every bar carries its value label (zero renders as 0.00).
pub fn bars_svg(rows: &[BeforeAfterCsvRow]) -> Result<String, CliError> {
    if rows.is_empty() {
        return Err(CliError::Failure(
            "no before/after rows: nothing to plot".into(),
        ));
    }
    let mut ordered: Vec<&BeforeAfterCsvRow> = rows.iter().collect();
    ordered.sort_by(|a, b| {
        b.avg_fpr_original
            .partial_cmp(&a.avg_fpr_original)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| a.dataset.cmp(&b.dataset))
    });

    let mut svg = Svg::new(WIDTH, HEIGHT);
    let frame = Frame::standard();
    svg.text(
        WIDTH / 2.0,
        26.0,
        16.0,
        "middle",
        "Average recall and FPR: original vs processed",
        "",
    );

    for i in 0..=5 {
        let v = f64::from(i) / 5.0;
        let y = frame.y(v);
        svg.line(frame.x0, y, frame.x0 + frame.w, y, "#dddddd", 1.0, "");
        svg.text(frame.x0 - 8.0, y + 4.0, 11.0, "end", &format!("{v:.1}"), "");
    }

    let series = [
        ("recall (original)", "#1f77b4"),
        ("recall (processed)", "#2ca02c"),
        ("fpr (original)", "#d62728"),
        ("fpr (processed)", "#ff7f0e"),
    ];
    let groups = ordered.len() as f64;
    let group_w = frame.w / groups;
    let bar_w = group_w / 5.0; // 4 bars + one bar-width gap per group

    for (g, row) in ordered.iter().enumerate() {
        let values = [
            row.avg_recall_original,
            row.avg_recall_processed,
            row.avg_fpr_original,
            row.avg_fpr_processed,
        ];
        let gx = frame.x0 + g as f64 * group_w + bar_w / 2.0;
        for (b, (value, (_, color))) in values.iter().zip(series.iter()).enumerate() {
            let clamped = value.clamp(0.0, 1.0);
            let x = gx + b as f64 * bar_w;
            let h = clamped * frame.h;
            svg.rect(x, frame.y0 + frame.h - h, bar_w * 0.92, h, color, 1.0);
            svg.text(
                x + bar_w * 0.46,
                frame.y0 + frame.h - h - 4.0,
                10.0,
                "middle",
                &format!("{value:.2}"),
                "",
            );
        }
        svg.text(
            gx + 2.0 * bar_w,
            frame.y0 + frame.h + 18.0,
            12.0,
            "middle",
            &row.dataset,
            "",
        );
    }
    frame.draw_box(&mut svg);

    // Legend.
    let lx = frame.x0 + 10.0;
    for (i, (label, color)) in series.iter().enumerate() {
        let y = frame.y0 + 12.0 + 16.0 * i as f64;
        svg.rect(lx, y - 8.0, 12.0, 12.0, color, 1.0);
        svg.text(lx + 18.0, y + 2.0, 11.0, "start", label, "");
    }
    Ok(svg.finish())
}

fn write_figure(dir: &Path, name: &str, content: &str) -> Result<PathBuf, CliError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::Failure(format!("cannot create {}: {e}", dir.display())))?;
    let path = dir.join(name);
    std::fs::write(&path, content)
        .map_err(|e| CliError::Failure(format!("cannot write {}: {e}", path.display())))?;
    Ok(path)
}

/// Renders every (dataset, provenance) histogram found in `histogram.csv`,
/// optionally filtered to one dataset. Returns the files written.
pub fn emit_histograms(run_dir: &Path, dataset: Option<&str>) -> Result<Vec<PathBuf>, CliError> {
    let rows: Vec<HistogramRow> = read_csv(&run_dir.join(HISTOGRAM_CSV))?;
    let rows: Vec<HistogramRow> = match dataset {
        Some(d) => rows.into_iter().filter(|r| r.dataset == d).collect(),
        None => rows,
    };
    if rows.is_empty() {
        return Err(CliError::Failure(match dataset {
            Some(d) => format!("no histogram rows for dataset {d:?} in {HISTOGRAM_CSV}"),
            None => format!("{HISTOGRAM_CSV} has no rows; run the pipeline first"),
        }));
    }
    let keys: BTreeSet<(String, String)> = rows
        .iter()
        .map(|r| (r.dataset.clone(), r.provenance.clone()))
        .collect();
    let dir = run_dir.join(FIGURES_DIR);
    let mut written = Vec::new();
    for (ds, prov) in keys {
        let subset: Vec<HistogramRow> = rows
            .iter()
            .filter(|r| r.dataset == ds && r.provenance == prov)
            .cloned()
            .collect();
        let svg = histogram_svg(&ds, &prov, &subset)?;
        written.push(write_figure(
            &dir,
            &format!("histogram__{}__{prov}.svg", slug(&ds)),
            &svg,
        )?);
    }
    Ok(written)
}

/// Renders one multi-series ROC figure per (dataset, provenance) pair found
/// in `reports.csv`; AUC legend values come from the same reports the CSV
/// readers see. Report rows without curve points are skipped with a warning
/// on stderr.
pub fn emit_rocs(run_dir: &Path, dataset: Option<&str>) -> Result<Vec<PathBuf>, CliError> {
    let reports: Vec<ReportRow> = read_csv(&run_dir.join(REPORTS_CSV))?;
    let points: Vec<RocPointRow> = read_csv(&run_dir.join(ROC_POINTS_CSV))?;
    let reports: Vec<ReportRow> = match dataset {
        Some(d) => reports.into_iter().filter(|r| r.dataset == d).collect(),
        None => reports,
    };
    if reports.is_empty() {
        return Err(CliError::Failure(match dataset {
            Some(d) => format!("no report rows for dataset {d:?} in {REPORTS_CSV}"),
            None => format!("{REPORTS_CSV} has no rows; run the pipeline first"),
        }));
    }
    let keys: BTreeSet<(String, String)> = reports
        .iter()
        .map(|r| (r.dataset.clone(), r.provenance.clone()))
        .collect();
    let dir = run_dir.join(FIGURES_DIR);
    let mut written = Vec::new();
    for (ds, prov) in keys {
        let mut series = Vec::new();
        for report in reports
            .iter()
            .filter(|r| r.dataset == ds && r.provenance == prov)
        {
            let pts: Vec<(f64, f64)> = points
                .iter()
                .filter(|p| p.dataset == ds && p.provenance == prov && p.model == report.model)
                .map(|p| (p.fpr, p.tpr))
                .collect();
            if pts.is_empty() {
                eprintln!(
                    "warning: no ROC points for model {} on {ds} ({prov}); series skipped",
                    report.model
                );
                continue;
            }
            series.push(RocSeries {
                model: report.model.clone(),
                auc: report.auc,
                points: pts,
            });
        }
        if series.is_empty() {
            eprintln!("warning: no ROC series at all for {ds} ({prov}); figure skipped");
            continue;
        }
        let svg = roc_svg(&ds, &prov, &series)?;
        written.push(write_figure(
            &dir,
            &format!("roc__{}__{prov}.svg", slug(&ds)),
            &svg,
        )?);
    }
    Ok(written)
}

/// Renders the clustered before/after bars from `before_after.csv`.
pub fn emit_bars(run_dir: &Path) -> Result<PathBuf, CliError> {
    let rows: Vec<BeforeAfterCsvRow> = read_csv(&run_dir.join(BEFORE_AFTER_CSV))?;
    if rows.is_empty() {
        return Err(CliError::Failure(format!(
            "{BEFORE_AFTER_CSV} has no rows; run the pipeline first"
        )));
    }
    let svg = bars_svg(&rows)?;
    write_figure(&run_dir.join(FIGURES_DIR), "bars.svg", &svg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hist_row(class: &str, syscall: u32, count: usize) -> HistogramRow {
        HistogramRow {
            dataset: "d".into(),
            provenance: "original".into(),
            class: class.into(),
            syscall,
            count,
        }
    }

    #[test]
    fn histogram_embeds_each_bar_and_errors_on_empty() {
        let rows = vec![
            hist_row("normal", 1, 1),
            hist_row("normal", 2, 2),
            hist_row("intrusion", 2, 2),
            hist_row("intrusion", 3, 1),
        ];
        let svg = histogram_svg("d", "original", &rows).unwrap();
        assert!(svg.starts_with("<?xml"));
        assert!(svg.ends_with("</svg>\n"));
        // 4 bars drawn with the two class colors.
        assert!(svg.matches(NORMAL_COLOR).count() >= 2);
        assert!(svg.matches(INTRUSION_COLOR).count() >= 2);
        assert!(histogram_svg("d", "original", &[]).is_err());
    }

    #[test]
    fn identical_pools_draw_identical_bar_heights() {
        let rows = vec![hist_row("normal", 5, 7), hist_row("intrusion", 5, 7)];
        let svg = histogram_svg("d", "original", &rows).unwrap();
        // Two identical rects except for the fill color.
        let rects: Vec<&str> = svg
            .lines()
            .filter(|l| l.contains("fill-opacity=\"0.55\""))
            .collect();
        assert_eq!(rects.len(), 2);
        let strip = |s: &str| s.replace(NORMAL_COLOR, "C").replace(INTRUSION_COLOR, "C");
        assert_eq!(strip(rects[0]), strip(rects[1]));
    }

    #[test]
    fn roc_legend_carries_three_decimal_auc() {
        let series = vec![
            RocSeries {
                model: "knn".into(),
                auc: 0.98765,
                points: vec![(0.0, 0.0), (0.0, 1.0), (1.0, 1.0)],
            },
            RocSeries {
                model: "gnb".into(),
                auc: 0.5,
                points: vec![(0.0, 0.0), (1.0, 1.0)],
            },
        ];
        let svg = roc_svg("d", "processed", &series).unwrap();
        assert!(svg.contains("knn (0.988)"), "rounded to 3 decimals");
        assert!(svg.contains("gnb (0.500)"));
        assert!(roc_svg("d", "processed", &[]).is_err());
    }

    #[test]
    fn bars_sort_by_descending_original_fpr_and_label_zeros() {
        let row = |dataset: &str, fpr_orig: f64| BeforeAfterCsvRow {
            dataset: dataset.into(),
            avg_recall_original: 0.8,
            avg_recall_processed: 0.9,
            avg_fpr_original: fpr_orig,
            avg_fpr_processed: 0.0,
            fpr_ratio: 10.0,
            recall_ratio: 1.1,
        };
        let rows = vec![row("low", 0.05), row("high", 0.60)];
        let svg = bars_svg(&rows).unwrap();
        let high_at = svg.find(">high<").expect("dataset label present");
        let low_at = svg.find(">low<").expect("dataset label present");
        assert!(high_at < low_at, "higher original FPR drawn first");
        assert!(svg.contains(">0.00<"), "zero bars are labeled 0.00");
        // Eight bars: 2 datasets × 4 series.
        assert!(svg.matches(r#"fill-opacity="1""#).count() >= 8);
        assert!(bars_svg(&[]).is_err());
    }

    #[test]
    fn tick_labels_and_ceilings_are_friendly() {
        assert_eq!(nice_ceiling(7.3), 10.0);
        assert_eq!(nice_ceiling(0.03), 0.05);
        assert_eq!(nice_ceiling(1999.0), 2000.0);
        assert_eq!(tick_label(4.0), "4");
        assert_eq!(tick_label(2.5), "2.5");
    }
}
