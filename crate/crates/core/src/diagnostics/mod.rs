//! Probes of the optimizer's working assumptions: how well the applied
//! direction agrees with steepest descent, how curved the loss is inside the
//! search ball, and how inexact the inner loop may be.

mod angle;
mod curvature;

pub use angle::{angle_probe, summarize_angles, AngleRecord, AngleSummary};
pub use curvature::{estimate_curvature, sample_lp_ball, CurvatureEstimate};

use crate::{Error, Result};

/// `max_k 2 delta (k + 1) / m_f * |grad_k|`, with `k` counting inner
/// iterations from 1.
pub fn lambda_bound(delta: f64, m_f: f64, grad_norms: &[f64]) -> Result<f64> {
    if !(m_f > 0.0) || !m_f.is_finite() {
        return Err(Error::InvalidArgument(format!("curvature must be positive, got {m_f}")));
    }
    if grad_norms.is_empty() {
        return Err(Error::InvalidArgument("no inner-iteration gradient norms".into()));
    }
    Ok(grad_norms
        .iter()
        .enumerate()
        .map(|(i, g)| 2.0 * delta * (i as f64 + 2.0) / m_f * g)
        .fold(f64::NEG_INFINITY, f64::max))
}
