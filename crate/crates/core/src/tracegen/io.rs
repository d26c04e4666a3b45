//! Trace CSV files with an optional `.meta.json` sidecar.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use super::trace::{Trace, TraceMetadata, TraceRow};
use crate::error::{Error, Result};
use crate::types::{Feature, FeatureVector, NUM_FEATURES};

/// Column names in file order.
pub fn trace_columns() -> Vec<&'static str> {
    let mut cols = vec!["timestamp"];
    cols.extend(Feature::ALL.iter().map(|f| f.name()));
    cols.extend(["fps", "abs", "sessions"]);
    cols
}

/// `trace.csv` → `trace.meta.json`.
pub fn sidecar_path(path: &Path) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    path.with_file_name(format!("{stem}.meta.json"))
}

pub fn write_trace(trace: &Trace, path: &Path) -> Result<()> {
    let io = |e| Error::io(path, e);
    let mut w = BufWriter::new(File::create(path).map_err(io)?);
    writeln!(w, "{}", trace_columns().join(",")).map_err(io)?;
    let mut line = String::new();
    for r in &trace.rows {
        line.clear();
        use std::fmt::Write as _;
        let _ = write!(line, "{}", r.timestamp);
        for v in r.features.values() {
            let _ = write!(line, ",{v}");
        }
        let _ = write!(line, ",{},{},{}", r.fps, r.abs, r.sessions);
        writeln!(w, "{line}").map_err(io)?;
    }
    w.flush().map_err(io)?;
    let meta = sidecar_path(path);
    let json = serde_json::to_string_pretty(&trace.metadata)?;
    fs::write(&meta, json + "\n").map_err(|e| Error::io(&meta, e))
}

enum Column {
    Timestamp,
    Feature(usize),
    Fps,
    Abs,
    Sessions,
}

impl Column {
    fn slot(&self) -> usize {
        match *self {
            Column::Feature(i) => i,
            Column::Timestamp => NUM_FEATURES,
            Column::Fps => NUM_FEATURES + 1,
            Column::Abs => NUM_FEATURES + 2,
            Column::Sessions => NUM_FEATURES + 3,
        }
    }
}

fn column_for(name: &str) -> Option<Column> {
    match name {
        "timestamp" => Some(Column::Timestamp),
        "fps" => Some(Column::Fps),
        "abs" => Some(Column::Abs),
        "sessions" => Some(Column::Sessions),
        _ => Feature::from_name(name).map(|f| Column::Feature(f.index())),
    }
}

/// Reads a trace. Columns may appear in any order; the sidecar is optional.
pub fn read_trace(path: &Path) -> Result<Trace> {
    let expected = trace_columns().join(",");
    let schema = |message: String| Error::TraceSchema {
        path: path.to_path_buf(),
        message,
        expected: expected.clone(),
    };
    let format = |line: u64, message: String| Error::TraceFormat {
        path: path.to_path_buf(),
        line,
        message,
    };

    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            other => format(1, format!("{other:?}")),
        })?;
    let header = rdr.headers().map_err(|e| format(1, e.to_string()))?.clone();
    let mut columns = Vec::with_capacity(header.len());
    let mut seen = [false; NUM_FEATURES + 4];
    for name in header.iter() {
        let col = column_for(name).ok_or_else(|| schema(format!("unknown column {name:?}")))?;
        let slot = col.slot();
        if std::mem::replace(&mut seen[slot], true) {
            return Err(schema(format!("duplicate column {name:?}")));
        }
        columns.push(col);
    }
    let missing: Vec<&str> = trace_columns()
        .into_iter()
        .filter(|n| !seen[column_for(n).expect("known column").slot()])
        .collect();
    if !missing.is_empty() {
        return Err(schema(format!("missing columns {}", missing.join(","))));
    }

    let mut rows: Vec<TraceRow> = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            format(line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        let mut values = [0.0; NUM_FEATURES];
        let (mut ts, mut fps, mut abs, mut sessions) = (0.0, 0.0, 0.0, 0u32);
        for (field, col) in rec.iter().zip(&columns) {
            let num = || {
                field
                    .parse::<f64>()
                    .map_err(|_| format(line, format!("not a number: {field:?}")))
            };
            match col {
                Column::Timestamp => ts = num()?,
                Column::Feature(i) => values[*i] = num()?,
                Column::Fps => fps = num()?,
                Column::Abs => abs = num()?,
                Column::Sessions => {
                    sessions = field
                        .parse()
                        .map_err(|_| format(line, format!("bad session count {field:?}")))?
                }
            }
        }
        let features = FeatureVector::new(values).map_err(|e| format(line, e.to_string()))?;
        crate::types::ServiceSample::new(ts, fps, abs).map_err(|e| format(line, e.to_string()))?;
        if let Some(prev) = rows.last() {
            if ts - prev.timestamp != 1.0 {
                return Err(format(
                    line,
                    format!("timestamp {ts} does not follow {}", prev.timestamp),
                ));
            }
        }
        rows.push(TraceRow {
            timestamp: ts,
            features,
            fps,
            abs,
            sessions,
        });
    }

    let meta_path = sidecar_path(path);
    let metadata = if meta_path.exists() {
        let s = fs::read_to_string(&meta_path).map_err(|e| Error::io(&meta_path, e))?;
        let m: TraceMetadata = serde_json::from_str(&s)?;
        let covered: usize = m.segments.iter().map(|s| s.rows).sum();
        if m.duration != rows.len() || covered != rows.len() {
            return Err(schema(format!(
                "sidecar declares {} rows, file has {}",
                m.duration,
                rows.len()
            )));
        }
        m
    } else {
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "trace".into());
        TraceMetadata::external(&name, rows.len())
    };
    Ok(Trace { metadata, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tracegen::{synthesize_trace, LoadPattern, LoadShape, TestbedProfile};

    fn fixture_row(ts: u32, sessions: u32) -> String {
        let feats: Vec<String> = (0..NUM_FEATURES)
            .map(|i| format!("{}.5", i + ts as usize))
            .collect();
        format!("{ts},{},24.5,29,{sessions}", feats.join(","))
    }

    #[test]
    fn round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        let tr = synthesize_trace(
            &LoadPattern::new(LoadShape::flash_crowd(), 1800, 4),
            &TestbedProfile::default_profile(),
        )
        .unwrap();
        write_trace(&tr, &path).unwrap();
        assert!(sidecar_path(&path).exists());
        assert_eq!(read_trace(&path).unwrap(), tr);
    }

    #[test]
    fn hand_written_fixture_parses() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ext.csv");
        let body = [
            trace_columns().join(","),
            fixture_row(10, 3),
            fixture_row(11, 4),
            fixture_row(12, 5),
        ]
        .join("\n");
        fs::write(&path, body + "\n").unwrap();
        let tr = read_trace(&path).unwrap();
        assert_eq!(tr.len(), 3);
        assert_eq!(tr.rows[1].timestamp, 11.0);
        assert_eq!(tr.rows[2].features.get(Feature::CpuIdle), 12.5);
        assert_eq!(tr.rows[0].sessions, 3);
        assert_eq!(tr.metadata.segments[0].pattern_kind, "external");
        assert!(tr.utilization().is_none());
    }

    #[test]
    fn missing_column_is_schema_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        let cols: Vec<&str> = trace_columns()
            .into_iter()
            .filter(|c| *c != "net_rx_kb")
            .collect();
        fs::write(&path, cols.join(",") + "\n").unwrap();
        match read_trace(&path) {
            Err(Error::TraceSchema {
                message, expected, ..
            }) => {
                assert!(message.contains("net_rx_kb"));
                assert!(expected.starts_with("timestamp,cpu_idle"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_column_lists_schema() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        fs::write(&path, trace_columns().join(",") + ",extra\n").unwrap();
        let err = read_trace(&path).unwrap_err();
        assert!(matches!(err, Error::TraceSchema { .. }));
        assert!(err.to_string().contains("iface_util"), "{err}");
    }

    #[test]
    fn malformed_row_reports_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        let bad = fixture_row(1, 2).replacen("2.5", "x", 1);
        let body = [trace_columns().join(","), fixture_row(0, 1), bad].join("\n");
        fs::write(&path, body).unwrap();
        match read_trace(&path) {
            Err(Error::TraceFormat { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn gap_in_timestamps_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("gap.csv");
        let body = [
            trace_columns().join(","),
            fixture_row(0, 1),
            fixture_row(2, 1),
        ]
        .join("\n");
        fs::write(&path, body).unwrap();
        assert!(matches!(
            read_trace(&path),
            Err(Error::TraceFormat { line: 3, .. })
        ));
    }
}
