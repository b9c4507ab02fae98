use crate::numerics::l2_norm;

/// Angle between the descent direction `-grad` and the applied update.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AngleRecord {
    pub step: usize,
    /// Degrees in `[0, 180]`; `None` when either vector is zero.
    pub degrees: Option<f64>,
}

/// Degrees between `-grad` and `update`, `None` if either is zero or not finite.
///
/// Equal to the arccos of the normalized inner product, evaluated as
/// `2 atan2(|a - b|, |a + b|)` on the unit vectors, which stays accurate for
/// nearly parallel or opposite inputs where arccos loses half the digits.
pub fn angle_probe(grad: &[f64], update: &[f64]) -> Option<f64> {
    let (ng, nu) = (l2_norm(grad), l2_norm(update));
    if !(ng > 0.0 && nu > 0.0) || !ng.is_finite() || !nu.is_finite() {
        return None;
    }
    let (mut diff, mut sum) = (0.0, 0.0);
    for (g, u) in grad.iter().zip(update) {
        let (a, b) = (-g / ng, u / nu);
        diff += (a - b) * (a - b);
        sum += (a + b) * (a + b);
    }
    Some((2.0 * diff.sqrt().atan2(sum.sqrt())).to_degrees())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AngleSummary {
    /// Defined angles only.
    pub count: usize,
    pub undefined: usize,
    pub mean: f64,
    pub std: f64,
    /// Share of defined angles at most 45 degrees.
    pub within_45: f64,
}

pub fn summarize_angles(records: &[AngleRecord]) -> AngleSummary {
    let vals: Vec<f64> = records.iter().filter_map(|r| r.degrees).collect();
    let n = vals.len();
    let mean = if n == 0 { f64::NAN } else { vals.iter().sum::<f64>() / n as f64 };
    let std = if n == 0 {
        f64::NAN
    } else {
        (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64).sqrt()
    };
    AngleSummary {
        count: n,
        undefined: records.len() - n,
        mean,
        std,
        within_45: if n == 0 {
            f64::NAN
        } else {
            vals.iter().filter(|&&a| a <= 45.0).count() as f64 / n as f64
        },
    }
}
