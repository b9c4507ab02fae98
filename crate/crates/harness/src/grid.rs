//! Cartesian hyperparameter grids over dotted config keys.
//!
//! A grid file holds one `[axes]` table mapping keys to value arrays:
//!
//! ```toml
//! [axes]
//! "train.lr" = [2e-4, 1e-3]
//! "train.batch_size" = [32, 64]
//! ```
//!
//! Cells enumerate axes in key order, the first key varying slowest. Every
//! cell uses the template's seed, so cells differ only in their assignments
//! (add a `seed` axis for replicates).

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use fwrnn_core::data::Dataset;
use fwrnn_core::optim::TrainRecord;
use log::warn;
use toml::{Table, Value};

use crate::config::{from_table, set_path};
use crate::metrics::fmt_f64;
use crate::runner::run_on_dataset;
use crate::HarnessError;

pub const SUMMARY_FILE: &str = "summary.csv";

#[derive(Clone, Debug, PartialEq)]
pub struct GridSpec {
    pub axes: Vec<(String, Vec<Value>)>,
}

pub fn parse_grid(text: &str) -> Result<GridSpec, HarnessError> {
    let table: Table = text
        .parse()
        .map_err(|e: toml::de::Error| HarnessError::Config(vec![format!("grid: {}", e.message())]))?;
    let mut bad = Vec::new();
    for key in table.keys().filter(|k| *k != "axes") {
        bad.push(format!("grid: unknown key {key:?}"));
    }
    let mut axes = Vec::new();
    match table.get("axes") {
        Some(Value::Table(t)) => {
            for (k, v) in t {
                match v {
                    Value::Array(vals) if !vals.is_empty() => axes.push((k.clone(), vals.clone())),
                    _ => bad.push(format!("grid.axes.{k}: must be a non-empty array")),
                }
            }
        }
        _ => bad.push("grid.axes: missing table".into()),
    }
    if bad.is_empty() {
        Ok(GridSpec { axes })
    } else {
        Err(HarnessError::Config(bad))
    }
}

/// Key/value assignments of every cell, first axis slowest.
pub fn cells(grid: &GridSpec) -> Vec<Vec<(String, Value)>> {
    let mut out = vec![Vec::new()];
    for (key, vals) in &grid.axes {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                vals.iter().map(move |v| {
                    let mut p = prefix.clone();
                    p.push((key.clone(), v.clone()));
                    p
                })
            })
            .collect();
    }
    out
}

#[derive(Clone, Debug)]
pub struct CellResult {
    pub index: usize,
    pub out: PathBuf,
    pub assignments: Vec<(String, Value)>,
    /// Final-epoch record, or (exit code, message) on failure.
    pub outcome: Result<Option<TrainRecord>, (i32, String)>,
}

#[derive(Clone, Debug)]
pub struct GridSummary {
    pub cells: Vec<CellResult>,
    /// Name of the column the best cell was chosen by.
    pub criterion: &'static str,
    pub selected: Option<usize>,
    pub csv: String,
}

impl GridSummary {
    /// Exit code of the first failed cell, 0 if all succeeded.
    pub fn exit_code(&self) -> i32 {
        self.cells
            .iter()
            .find_map(|c| c.outcome.as_ref().err().map(|e| e.0))
            .unwrap_or(0)
    }
}

fn value_text(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

type DataCache = Mutex<HashMap<String, Result<Arc<Dataset>, (i32, String)>>>;

/// Runs every cell on `threads` workers and writes `summary.csv` into `out`.
/// A failing cell is recorded and the grid continues.
pub fn run_grid(
    template: &Table,
    grid: &GridSpec,
    out: &Path,
    dataset_root: Option<&Path>,
    threads: usize,
) -> Result<GridSummary, HarnessError> {
    std::fs::create_dir_all(out)?;
    let assignments = cells(grid);
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<CellResult>>> = Mutex::new(vec![None; assignments.len()]);
    let cache: DataCache = Mutex::new(HashMap::new());
    let run_cell = |index: usize| -> CellResult {
        let dir = out.join(format!("cell-{index:03}"));
        let outcome = (|| -> Result<Option<TrainRecord>, HarnessError> {
            let mut table = template.clone();
            for (k, v) in &assignments[index] {
                set_path(&mut table, k, v.clone())?;
            }
            table.insert("output".into(), Value::String(dir.display().to_string()));
            let cfg = from_table(table)?;
            let key = toml::to_string(&cfg.data).expect("data config serializes");
            let ds = {
                let mut c = cache.lock().expect("data cache");
                c.entry(key)
                    .or_insert_with(|| {
                        cfg.data
                            .load(dataset_root)
                            .map(Arc::new)
                            .map_err(|e| {
                                let e = HarnessError::from(e);
                                (e.exit_code(), e.to_string())
                            })
                    })
                    .clone()
            };
            let ds = ds.map_err(|(code, msg)| match code {
                1 => HarnessError::Config(vec![msg]),
                _ => HarnessError::Input(msg),
            })?;
            let run = run_on_dataset(&cfg, &ds, &dir)?;
            Ok(run.records.last().cloned())
        })();
        if let Err(e) = &outcome {
            warn!("grid cell {index} failed: {e}");
        }
        CellResult {
            index,
            out: dir,
            assignments: assignments[index].clone(),
            outcome: outcome.map_err(|e| (e.exit_code(), e.to_string())),
        }
    };
    std::thread::scope(|s| {
        for _ in 0..threads.max(1).min(assignments.len().max(1)) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= assignments.len() {
                    break;
                }
                let r = run_cell(i);
                results.lock().expect("results")[i] = Some(r);
            });
        }
    });
    let cells: Vec<CellResult> = results
        .into_inner()
        .expect("results")
        .into_iter()
        .map(|c| c.expect("every cell ran"))
        .collect();
    let summary = summarize(grid, cells);
    std::fs::write(out.join(SUMMARY_FILE), &summary.csv)?;
    Ok(summary)
}

fn summarize(grid: &GridSpec, cells: Vec<CellResult>) -> GridSummary {
    let finals: Vec<Option<&TrainRecord>> = cells
        .iter()
        .map(|c| c.outcome.as_ref().ok().and_then(Option::as_ref))
        .collect();
    let any = |f: fn(&TrainRecord) -> Option<f64>| finals.iter().flatten().any(|r| f(r).is_some());
    // (column, value getter, larger is better)
    let (criterion, get, maximize): (&'static str, fn(&TrainRecord) -> Option<f64>, bool) =
        if any(|r| r.val_accuracy) {
            ("val_accuracy", |r| r.val_accuracy, true)
        } else if any(|r| r.val_loss) {
            ("val_loss", |r| r.val_loss, false)
        } else {
            ("train_loss", |r| Some(r.train_loss), false)
        };
    let mut selected: Option<(usize, f64)> = None;
    for (i, r) in finals.iter().enumerate() {
        let Some(v) = r.and_then(get).filter(|v| v.is_finite()) else {
            continue;
        };
        let better = match selected {
            None => true,
            Some((_, b)) => (maximize && v > b) || (!maximize && v < b),
        };
        if better {
            selected = Some((i, v));
        }
    }
    let selected = selected.map(|s| s.0);

    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["cell".to_string()];
    header.extend(grid.axes.iter().map(|(k, _)| k.clone()));
    header.extend(
        [
            "status", "epochs", "train_loss", "test_loss", "test_accuracy", "val_loss", "val_accuracy", "selected_by",
            "selected",
        ]
        .map(String::from),
    );
    w.write_record(&header).expect("in-memory csv");
    let opt = |v: Option<f64>| v.map(fmt_f64).unwrap_or_default();
    for (i, c) in cells.iter().enumerate() {
        let mut row = vec![c.index.to_string()];
        row.extend(c.assignments.iter().map(|(_, v)| value_text(v)));
        match &c.outcome {
            Ok(r) => {
                row.push("ok".into());
                row.push(r.as_ref().map_or(0, |r| r.epoch).to_string());
                row.push(opt(r.as_ref().map(|r| r.train_loss)));
                row.push(opt(r.as_ref().map(|r| r.test_loss)));
                row.push(opt(r.as_ref().and_then(|r| r.test_accuracy)));
                row.push(opt(r.as_ref().and_then(|r| r.val_loss)));
                row.push(opt(r.as_ref().and_then(|r| r.val_accuracy)));
            }
            Err((code, msg)) => {
                row.push(format!("error {code}: {}", msg.replace('\n', " ")));
                row.extend(std::iter::repeat_n(String::new(), 6));
            }
        }
        row.push(criterion.to_string());
        row.push(if selected == Some(i) { "yes" } else { "" }.to_string());
        w.write_record(&row).expect("in-memory csv");
    }
    let csv = String::from_utf8(w.into_inner().expect("in-memory csv")).expect("utf-8 csv");
    GridSummary {
        cells,
        criterion,
        selected,
        csv,
    }
}
