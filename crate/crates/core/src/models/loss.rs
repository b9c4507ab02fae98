use serde::{Deserialize, Serialize};

use super::Targets;
use crate::numerics::Matrix;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LossKind {
    /// Mean over the batch of the mean squared error over output units.
    /// Class targets are encoded as the class index for a 1-unit output,
    /// one-hot otherwise.
    Mse,
    /// Softmax cross-entropy averaged over the batch.
    CrossEntropy,
}

/// Batch loss and its gradient with respect to the network outputs.
pub fn loss_and_grad(kind: LossKind, out: &Matrix, targets: &Targets) -> Result<(f64, Matrix)> {
    let (b, k) = out.shape();
    if targets.len() != b {
        return Err(Error::shape("loss targets", b, targets.len()));
    }
    let mut grad = Matrix::zeros(b, k);
    if b == 0 {
        return Ok((0.0, grad));
    }
    let bf = b as f64;
    let mut total = 0.0;
    match kind {
        LossKind::Mse => {
            let scale = 1.0 / (bf * k as f64);
            for i in 0..b {
                for j in 0..k {
                    let y = target_value(targets, i, j, k)?;
                    let d = out.get(i, j) - y;
                    total += d * d;
                    grad.set(i, j, 2.0 * d * scale);
                }
            }
            total *= scale;
        }
        LossKind::CrossEntropy => {
            let Targets::Classes(cls) = targets else {
                return Err(Error::InvalidArgument(
                    "cross-entropy needs class targets".into(),
                ));
            };
            for (i, &y) in cls.iter().enumerate() {
                if y >= k {
                    return Err(Error::InvalidArgument(format!(
                        "class {y} out of range for {k} outputs"
                    )));
                }
                let row = out.row(i);
                let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let z: f64 = row.iter().map(|v| (v - max).exp()).sum();
                let log_z = max + z.ln();
                total += log_z - row[y];
                for j in 0..k {
                    let p = (row[j] - log_z).exp();
                    let t = if j == y { 1.0 } else { 0.0 };
                    grad.set(i, j, (p - t) / bf);
                }
            }
            total /= bf;
        }
    }
    if !total.is_finite() {
        return Err(Error::non_finite("loss"));
    }
    Ok((total, grad))
}

fn target_value(targets: &Targets, i: usize, j: usize, k: usize) -> Result<f64> {
    match targets {
        Targets::Values(m) => {
            if m.cols() != k {
                return Err(Error::shape("regression targets", k, m.cols()));
            }
            Ok(m.get(i, j))
        }
        Targets::Classes(c) if k == 1 => Ok(c[i] as f64),
        Targets::Classes(c) => {
            if c[i] >= k {
                return Err(Error::InvalidArgument(format!(
                    "class {} out of range for {k} outputs",
                    c[i]
                )));
            }
            Ok(if c[i] == j { 1.0 } else { 0.0 })
        }
    }
}

/// Predicted class per row: argmax, or `output > 0.5` for a single unit.
pub fn predicted_classes(out: &Matrix) -> Vec<usize> {
    (0..out.rows())
        .map(|i| {
            let row = out.row(i);
            if row.len() == 1 {
                usize::from(row[0] > 0.5)
            } else {
                let mut best = 0;
                for j in 1..row.len() {
                    if row[j] > row[best] {
                        best = j;
                    }
                }
                best
            }
        })
        .collect()
}

/// Number of correct predictions, `None` for regression targets.
pub fn correct_count(out: &Matrix, targets: &Targets) -> Option<usize> {
    let Targets::Classes(cls) = targets else {
        return None;
    };
    Some(
        predicted_classes(out)
            .iter()
            .zip(cls)
            .filter(|(p, y)| p == y)
            .count(),
    )
}
