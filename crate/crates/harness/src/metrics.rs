//! `metrics.csv`: one row per epoch, fixed column order.

use std::io::Write;
use std::path::Path;

use fwrnn_core::optim::TrainRecord;

use crate::HarnessError;

pub const COLUMNS: [&str; 13] = [
    "epoch",
    "train_loss",
    "test_loss",
    "test_accuracy",
    "val_loss",
    "val_accuracy",
    "lr",
    "delta",
    "grad_updates",
    "grad_evals",
    "angle_deg",
    "ball_excess",
    "wall_seconds",
];

/// Columns excluded from byte-level determinism comparisons.
pub const TIMING_COLUMNS: [&str; 1] = ["wall_seconds"];

/// Shortest representation that parses back to the same `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

fn opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

pub fn record_fields(r: &TrainRecord) -> [String; 13] {
    [
        r.epoch.to_string(),
        fmt_f64(r.train_loss),
        fmt_f64(r.test_loss),
        opt(r.test_accuracy),
        opt(r.val_loss),
        opt(r.val_accuracy),
        fmt_f64(r.lr),
        opt(r.delta),
        r.grad_updates.to_string(),
        r.grad_evals.to_string(),
        opt(r.angle_deg),
        opt(r.ball_excess),
        format!("{:.3}", r.wall_seconds),
    ]
}

/// Streams rows to a CSV file, flushing after each so partial runs are readable.
pub struct MetricsWriter<W: Write> {
    inner: csv::Writer<W>,
}

impl<W: Write> MetricsWriter<W> {
    pub fn new(out: W) -> Result<Self, HarnessError> {
        let mut inner = csv::Writer::from_writer(out);
        inner.write_record(COLUMNS).map_err(csv_err)?;
        inner.flush()?;
        Ok(MetricsWriter { inner })
    }

    pub fn push(&mut self, r: &TrainRecord) -> Result<(), HarnessError> {
        self.inner.write_record(record_fields(r)).map_err(csv_err)?;
        self.inner.flush()?;
        Ok(())
    }
}

fn csv_err(e: csv::Error) -> HarnessError {
    HarnessError::Output(e.to_string())
}

/// A parsed metrics file: `rows[i][j]` is column `COLUMNS[j]`, `None` when empty.
#[derive(Clone, Debug, PartialEq)]
pub struct Metrics {
    pub rows: Vec<Vec<Option<f64>>>,
}

impl Metrics {
    pub fn column(&self, name: &str) -> Vec<Option<f64>> {
        let j = COLUMNS.iter().position(|c| *c == name).expect("known column");
        self.rows.iter().map(|r| r[j]).collect()
    }
}

pub fn read_metrics(path: &Path) -> Result<Metrics, HarnessError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| HarnessError::Input(format!("{}: {e}", path.display())))?;
    parse_metrics(&text).map_err(|e| HarnessError::Input(format!("{}: {e}", path.display())))
}

pub fn parse_metrics(text: &str) -> Result<Metrics, String> {
    if text.trim().is_empty() {
        return Ok(Metrics { rows: Vec::new() });
    }
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| e.to_string())?
        .iter()
        .map(str::to_string)
        .collect();
    if header != COLUMNS {
        return Err(format!("schema mismatch: header {header:?}, expected {COLUMNS:?}"));
    }
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| e.to_string())?;
        let row = rec
            .iter()
            .map(|f| {
                if f.is_empty() {
                    Ok(None)
                } else {
                    f.parse::<f64>().map(Some).map_err(|_| format!("row {}: bad number {f:?}", i + 1))
                }
            })
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(row);
    }
    Ok(Metrics { rows })
}

/// The CSV text with timing columns blanked, for determinism comparisons.
pub fn without_timing(text: &str) -> String {
    let skip: Vec<usize> = TIMING_COLUMNS
        .iter()
        .filter_map(|t| COLUMNS.iter().position(|c| c == t))
        .collect();
    text.lines()
        .map(|line| {
            line.split(',')
                .enumerate()
                .filter(|(i, _)| !skip.contains(i))
                .map(|(_, f)| f)
                .collect::<Vec<_>>()
                .join(",")
        })
        .collect::<Vec<_>>()
        .join("\n")
}
