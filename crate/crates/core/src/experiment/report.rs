use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::runner::RunRecord;
use crate::error::{Error, Result};
use crate::metrics::MetricDisplay;

const COLUMNS: [&str; 16] = [
    "run_id",
    "method",
    "protocol",
    "train_trace",
    "test_trace",
    "n_train",
    "n_test",
    "ca",
    "ba",
    "tpr",
    "tnr",
    "far_as_printed",
    "far_fpr",
    "tp",
    "fp",
    "tn",
];

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// One row per run; undefined metrics are left empty.
pub fn write_metrics_csv(records: &[RunRecord], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    let mut header: Vec<&str> = COLUMNS.to_vec();
    header.push("fn");
    w.write_record(&header).map_err(|e| csv_err(path, e))?;
    for r in records {
        let m = &r.report;
        let c = &r.confusion;
        w.write_record([
            r.id.clone(),
            r.method.clone(),
            r.protocol.clone(),
            r.train_trace.clone().unwrap_or_default(),
            r.test_trace.clone(),
            r.n_train.to_string(),
            r.n_test.to_string(),
            m.ca.to_string(),
            opt(m.ba),
            opt(m.tpr),
            opt(m.tnr),
            opt(m.far_as_printed),
            opt(m.far_fpr),
            c.tp.to_string(),
            c.fp.to_string(),
            c.tn.to_string(),
            c.fn_.to_string(),
        ])
        .map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::io(path, std::io::Error::other(format!("{other:?}"))),
    }
}

/// Aligned plain-text table grouped by protocol, in the style of a results table.
pub fn render_metrics_table(records: &[RunRecord]) -> String {
    let header = [
        "Run", "Train", "Test", "CA", "BA", "TPR", "TNR", "FAR", "FAR(fpr)",
    ];
    let mut out = String::new();
    for protocol in ["holdout", "cross_trace", "prequential"] {
        let rows: Vec<[String; 9]> = records
            .iter()
            .filter(|r| r.protocol == protocol)
            .map(|r| {
                let m = &r.report;
                [
                    r.id.clone(),
                    r.train_trace.clone().unwrap_or_else(|| "-".into()),
                    r.test_trace.clone(),
                    MetricDisplay(Some(m.ca)).to_string(),
                    MetricDisplay(m.ba).to_string(),
                    MetricDisplay(m.tpr).to_string(),
                    MetricDisplay(m.tnr).to_string(),
                    MetricDisplay(m.far_as_printed).to_string(),
                    MetricDisplay(m.far_fpr).to_string(),
                ]
            })
            .collect();
        if rows.is_empty() {
            continue;
        }
        let mut widths = header.map(str::len);
        for row in &rows {
            for (w, cell) in widths.iter_mut().zip(row) {
                *w = (*w).max(cell.len());
            }
        }
        if !out.is_empty() {
            out.push('\n');
        }
        let _ = writeln!(out, "[{protocol}]");
        let line = |cells: &[&str]| {
            cells
                .iter()
                .zip(widths)
                .enumerate()
                .map(|(i, (c, w))| {
                    if i < 3 {
                        format!("{c:<w$}")
                    } else {
                        format!("{c:>w$}")
                    }
                })
                .collect::<Vec<_>>()
                .join("  ")
                .trim_end()
                .to_string()
        };
        let _ = writeln!(out, "{}", line(&header));
        let _ = writeln!(out, "{}", widths.map(|w| "-".repeat(w)).join("  "));
        for row in &rows {
            let cells: Vec<&str> = row.iter().map(String::as_str).collect();
            let _ = writeln!(out, "{}", line(&cells));
        }
    }
    out
}

pub fn write_metrics_txt(records: &[RunRecord], path: &Path) -> Result<()> {
    fs::write(path, render_metrics_table(records)).map_err(|e| Error::io(path, e))
}
