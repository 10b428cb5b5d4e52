//! Rendering of evaluation results: CSV, aligned text tables and JSON.
//!
//! Output is byte-deterministic for a given grid outcome: fixed six-decimal
//! accuracy formatting, fold accuracies joined by `;`, stable row order.

use std::fmt::Write as _;

use crate::error::Result;

use super::{EvaluationReport, GridOutcome};

/// CSV header used by [`grid_csv`].
pub const GRID_CSV_HEADER: &str =
    "feature_group,model,threshold,fold_accuracies,mean_accuracy,pooled_accuracy";

fn fold_accuracies_field(report: &EvaluationReport) -> String {
    report
        .fold_accuracies
        .iter()
        .map(|a| format!("{a:.6}"))
        .collect::<Vec<_>>()
        .join(";")
}

/// One CSV row per successful grid cell, in the outcome's (sorted) order.
pub fn grid_csv(outcome: &GridOutcome) -> String {
    let mut out = String::new();
    out.push_str(GRID_CSV_HEADER);
    out.push('\n');
    for entry in &outcome.entries {
        let r = &entry.report;
        let _ = writeln!(
            out,
            "{},{},{},{},{:.6},{:.6}",
            r.spec.groups,
            r.spec.model,
            r.spec.threshold,
            fold_accuracies_field(r),
            r.mean_accuracy,
            r.pooled_accuracy,
        );
    }
    out
}

/// Aligned text table of the grid results, with any failures and report
/// notes listed underneath.
pub fn grid_table(outcome: &GridOutcome) -> String {
    let headers = ["Feature Group", "Model", "T/H", "Mean Accuracy", "Pooled"];
    let mut rows: Vec<[String; 5]> = Vec::with_capacity(outcome.entries.len());
    for entry in &outcome.entries {
        let r = &entry.report;
        rows.push([
            r.spec.groups.clone(),
            r.spec.model.to_uppercase(),
            r.spec.threshold.to_string(),
            format!("{:.3}%", r.mean_accuracy * 100.0),
            format!("{:.3}%", r.pooled_accuracy * 100.0),
        ]);
    }
    let mut widths: Vec<usize> = headers.iter().map(|h| h.len()).collect();
    for row in &rows {
        for (w, cell) in widths.iter_mut().zip(row.iter()) {
            *w = (*w).max(cell.len());
        }
    }
    let mut out = String::new();
    let write_row = |out: &mut String, cells: &[String]| {
        let line = cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:<w$}"))
            .collect::<Vec<_>>()
            .join("  ");
        out.push_str(line.trim_end());
        out.push('\n');
    };
    write_row(&mut out, &headers.map(String::from));
    write_row(
        &mut out,
        &widths.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>(),
    );
    for row in &rows {
        write_row(&mut out, row);
    }
    let mut notes: Vec<String> = Vec::new();
    for entry in &outcome.entries {
        for n in &entry.report.notes {
            let line = format!(
                "note [{} {} t={}]: {n}",
                entry.report.spec.groups, entry.report.spec.model, entry.report.spec.threshold
            );
            if !notes.contains(&line) {
                notes.push(line);
            }
        }
    }
    if !notes.is_empty() {
        out.push('\n');
        for n in notes {
            out.push_str(&n);
            out.push('\n');
        }
    }
    if !outcome.failures.is_empty() {
        out.push('\n');
        for f in &outcome.failures {
            let _ = writeln!(
                out,
                "failed [{} {} t={}]: {}",
                f.spec.groups, f.spec.model, f.spec.threshold, f.error
            );
        }
    }
    out
}

/// Full machine-readable form, including confusion matrices.
pub fn grid_json(outcome: &GridOutcome) -> Result<String> {
    Ok(serde_json::to_string_pretty(outcome)?)
}

/// Multi-line summary of a single report.
pub fn experiment_summary(report: &EvaluationReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "groups={} model={} threshold={} folds={} seed={}",
        report.spec.groups,
        report.spec.model,
        report.spec.threshold,
        report.spec.folds,
        report.spec.seed
    );
    let _ = writeln!(out, "fold accuracies: {}", fold_accuracies_field(report));
    let _ = writeln!(
        out,
        "mean accuracy:   {:.6}  (pooled {:.6})",
        report.mean_accuracy, report.pooled_accuracy
    );
    let _ = writeln!(out, "confusion (rows = true class, columns = predicted):");
    for row in report.confusion.rows() {
        let cells: Vec<String> = row.iter().map(|c| format!("{c:>7}")).collect();
        let _ = writeln!(out, "  {}", cells.join(" "));
    }
    let _ = writeln!(
        out,
        "class counts: in_front={} equal={} behind={}",
        report.class_distribution.counts[0],
        report.class_distribution.counts[1],
        report.class_distribution.counts[2],
    );
    for n in &report.notes {
        let _ = writeln!(out, "note: {n}");
    }
    out
}
