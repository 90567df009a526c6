//! Human-readable and machine-readable rendering of metric reports.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use hcrf_core::MetricsReport;
use serde::Serialize;

use crate::cv::CvReport;
use crate::error::{io_err, Result};

/// Machine-readable body of a `metrics.json` file.
#[derive(Debug, Clone, Serialize)]
pub struct MetricsBundle<'a> {
    pub actions: &'a MetricsReport,
    pub activities: &'a MetricsReport,
}

/// Fixed-width text summary of one report.
pub fn render_metrics_text(title: &str, report: &MetricsReport, names: &[String]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "== {title} ==");
    let _ = writeln!(
        out,
        "accuracy {:.4}  macro-precision {:.4}  macro-recall {:.4}  macro-F1 {:.4}",
        report.accuracy, report.macro_precision, report.macro_recall, report.macro_f1
    );
    let width = names.iter().map(String::len).max().unwrap_or(5).max(5);
    let _ = writeln!(
        out,
        "{:>w$}  {:>7}  {:>9}  {:>7}  {:>7}",
        "class",
        "support",
        "precision",
        "recall",
        "F1",
        w = width
    );
    for (name, c) in names.iter().zip(&report.per_class) {
        let _ = writeln!(
            out,
            "{:>w$}  {:>7}  {:>9.4}  {:>7.4}  {:>7.4}",
            name,
            c.support,
            c.precision,
            c.recall,
            c.f1,
            w = width
        );
    }
    let _ = writeln!(
        out,
        "confusion (rows = ground truth, columns = detections):"
    );
    let cell = report
        .confusion
        .iter()
        .flatten()
        .map(|c| c.to_string().len())
        .max()
        .unwrap_or(1)
        .max(3);
    for (name, row) in names.iter().zip(&report.confusion) {
        let _ = write!(out, "{name:>width$} |");
        for count in row {
            let _ = write!(out, " {count:>cell$}");
        }
        let _ = writeln!(out);
    }
    out
}

/// Confusion matrix as CSV plot data: header row of predicted-class
/// names, one row per ground-truth class.
pub fn confusion_csv(report: &MetricsReport, names: &[String]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "gold\\pred,{}", names.join(","));
    for (name, row) in names.iter().zip(&report.confusion) {
        let cells: Vec<String> = row.iter().map(usize::to_string).collect();
        let _ = writeln!(out, "{name},{}", cells.join(","));
    }
    out
}

pub fn render_cv_text(report: &CvReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "== cross-validation ({} folds) ==", report.folds.len());
    for fold in &report.folds {
        let _ = writeln!(
            out,
            "fold[test={}]: action acc {:.4}  activity acc {:.4}",
            fold.test_subject, fold.actions.accuracy, fold.activities.accuracy
        );
    }
    for (label, block) in [
        ("actions", &report.actions),
        ("activities", &report.activities),
    ] {
        let _ = writeln!(
            out,
            "{label}: accuracy {:.4} +/- {:.4}  precision {:.4} +/- {:.4}  \
             recall {:.4} +/- {:.4}  F1 {:.4} +/- {:.4}",
            block.accuracy.mean,
            block.accuracy.std_err,
            block.macro_precision.mean,
            block.macro_precision.std_err,
            block.macro_recall.mean,
            block.macro_recall.std_err,
            block.macro_f1.mean,
            block.macro_f1.std_err,
        );
    }
    out
}

/// Writes `metrics.json`, `metrics.txt`, and the two confusion CSVs.
pub fn write_metrics_files(
    dir: &Path,
    actions: &MetricsReport,
    activities: &MetricsReport,
    action_names: &[String],
    activity_names: &[String],
) -> Result<()> {
    let bundle = MetricsBundle {
        actions,
        activities,
    };
    let json_path = dir.join("metrics.json");
    let mut json = serde_json::to_string_pretty(&bundle).expect("serializable");
    json.push('\n');
    fs::write(&json_path, json).map_err(io_err(&json_path))?;

    let mut text = render_metrics_text("actions (pooled segments)", actions, action_names);
    text.push('\n');
    text.push_str(&render_metrics_text(
        "activities (per sequence)",
        activities,
        activity_names,
    ));
    let text_path = dir.join("metrics.txt");
    fs::write(&text_path, text).map_err(io_err(&text_path))?;

    let ca = dir.join("confusion_actions.csv");
    fs::write(&ca, confusion_csv(actions, action_names)).map_err(io_err(&ca))?;
    let cv = dir.join("confusion_activities.csv");
    fs::write(&cv, confusion_csv(activities, activity_names)).map_err(io_err(&cv))?;
    Ok(())
}
