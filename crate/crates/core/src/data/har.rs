use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{corrupt, open, Dataset, DatasetName, DatasetSpec, Normalization};
use crate::models::{SequenceBatch, Targets};
use crate::Result;

/// Raw inertial signal files, in channel order.
pub const HAR_CHANNELS: [&str; 9] = [
    "body_acc_x",
    "body_acc_y",
    "body_acc_z",
    "body_gyro_x",
    "body_gyro_y",
    "body_gyro_z",
    "total_acc_x",
    "total_acc_y",
    "total_acc_z",
];
pub const HAR_STEPS: usize = 128;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HarOptions {
    /// Require exactly 7352 train / 2947 test windows.
    pub check_shape: bool,
}

impl Default for HarOptions {
    fn default() -> Self {
        HarOptions { check_shape: true }
    }
}

fn read_matrix(path: &Path, cols: usize) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for (i, line) in BufReader::new(open(path)?).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let before = out.len();
        for tok in line.split_whitespace() {
            let v: f64 = tok
                .parse()
                .map_err(|_| corrupt(path, format!("line {}: bad number {tok:?}", i + 1)))?;
            if !v.is_finite() {
                return Err(corrupt(path, format!("line {}: non-finite value", i + 1)));
            }
            out.push(v);
        }
        if out.len() - before != cols {
            return Err(corrupt(path, format!("line {}: {} columns, expected {cols}", i + 1, out.len() - before)));
        }
    }
    Ok(out)
}

/// Activities 1-3 (walking, upstairs, downstairs) are class 1;
/// 4-6 (sitting, standing, laying) are class 0.
fn binarize(path: &Path, raw: &[f64]) -> Result<Vec<usize>> {
    raw.iter()
        .enumerate()
        .map(|(i, &v)| match v as i64 {
            1..=3 if v.fract() == 0.0 => Ok(1),
            4..=6 if v.fract() == 0.0 => Ok(0),
            _ => Err(corrupt(path, format!("line {}: activity label {v}", i + 1))),
        })
        .collect()
}

fn split(root: &Path, part: &str, expected: usize, opts: &HarOptions) -> Result<(Vec<f64>, Vec<usize>)> {
    let label_path = root.join(part).join(format!("y_{part}.txt"));
    let labels = binarize(&label_path, &read_matrix(&label_path, 1)?)?;
    let n = labels.len();
    if opts.check_shape && n != expected {
        return Err(corrupt(&label_path, format!("{n} windows, expected {expected}")));
    }
    let mut x = vec![0.0; n * HAR_STEPS * HAR_CHANNELS.len()];
    for (c, name) in HAR_CHANNELS.iter().enumerate() {
        let path = root.join(part).join("Inertial Signals").join(format!("{name}_{part}.txt"));
        let m = read_matrix(&path, HAR_STEPS)?;
        if m.len() != n * HAR_STEPS {
            return Err(corrupt(&path, format!("{} rows, labels file has {n}", m.len() / HAR_STEPS)));
        }
        for s in 0..n {
            for t in 0..HAR_STEPS {
                x[(s * HAR_STEPS + t) * HAR_CHANNELS.len() + c] = m[s * HAR_STEPS + t];
            }
        }
    }
    for class in [0, 1] {
        if !labels.contains(&class) {
            return Err(corrupt(&label_path, format!("no window of class {class}")));
        }
    }
    Ok((x, labels))
}

/// Binary HAR from a UCI HAR directory, with the published split sizes enforced.
pub fn load_har2(root: &Path) -> Result<Dataset> {
    load_har2_with(root, &HarOptions::default())
}

/// Stacks the 9 inertial channels per step and standardizes each channel
/// with training-set statistics.
pub fn load_har2_with(root: &Path, opts: &HarOptions) -> Result<Dataset> {
    let (mut train_x, train_y) = split(root, "train", 7352, opts)?;
    let (mut test_x, test_y) = split(root, "test", 2947, opts)?;
    let d = HAR_CHANNELS.len();
    let norm = Normalization::fit(&train_x, d, true)?;
    norm.apply(&mut train_x, d);
    norm.apply(&mut test_x, d);
    let (n_train, n_test) = (train_y.len(), test_y.len());
    Ok(Dataset {
        spec: DatasetSpec {
            name: DatasetName::Har2,
            train_size: n_train,
            validation_size: 0,
            test_size: n_test,
            steps: HAR_STEPS,
            input_dim: d,
            seed: 0,
            normalization: Some(norm),
            notes: vec![
                "classes: 1 = walking/upstairs/downstairs, 0 = sitting/standing/laying".into(),
                "normalization: per channel".into(),
            ],
        },
        train: SequenceBatch::new(train_x, n_train, HAR_STEPS, d, Targets::Classes(train_y))?,
        validation: None,
        test: SequenceBatch::new(test_x, n_test, HAR_STEPS, d, Targets::Classes(test_y))?,
    })
}
