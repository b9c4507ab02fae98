//! One outer step of the optimizer:
//!
//! ```text
//! d_0 = 0
//! for k = 1..K:
//!     s_k = argmin_{||s||_p <= delta_t} <s, grad F(w + d_{k-1})>
//!     d_k = (1 - gamma_k) d_{k-1} + gamma_k s_k,     gamma_k = 1/k
//! w <- w + eta * d_K
//! ```
//!
//! Each `d_k` is a convex combination of points of the ball, so the search
//! never leaves it.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::baselines::AdamState;
use crate::lmo::lmo_lp_ball;
use crate::numerics::{l2_norm, norm, PNorm};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum DeltaSchedule {
    /// `delta0` throughout.
    Constant,
    /// `delta0` scaled by the learning-rate decay: `delta0 * lr_t / lr_0`.
    FollowLr,
    /// `delta0 / (1 + (t - 1) / tau)` in the global outer step `t`.
    Harmonic { tau: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OuterMode {
    /// `w += eta * d_K`.
    Plain,
    /// `-d_K` is handed to Adam as its gradient, so Adam descends along `d_K`.
    AdamFed,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BatchMode {
    /// A new minibatch for every inner iteration after the first.
    Fresh,
    /// All inner iterations of an outer step share its minibatch.
    Fixed,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StepRule {
    /// `gamma_k = 1/k`.
    Harmonic,
    /// `gamma_k = 2/(k+1)`.
    Classic,
}

impl StepRule {
    pub fn gamma(self, k: usize) -> f64 {
        match self {
            StepRule::Harmonic => 1.0 / k as f64,
            StepRule::Classic => 2.0 / (k as f64 + 1.0),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FwConfig {
    pub p: PNorm,
    pub delta0: f64,
    pub delta_schedule: DeltaSchedule,
    /// Inner iterations `K`.
    pub inner_steps: usize,
    /// Outer step size, also the learning rate handed to Adam in `adam-fed` mode.
    pub eta: f64,
    pub outer_mode: OuterMode,
    pub batch_mode: BatchMode,
    pub step_rule: StepRule,
}

impl Default for FwConfig {
    fn default() -> Self {
        FwConfig {
            p: PNorm::TWO,
            delta0: 1.0,
            delta_schedule: DeltaSchedule::FollowLr,
            inner_steps: 5,
            eta: 1e-3,
            outer_mode: OuterMode::Plain,
            batch_mode: BatchMode::Fresh,
            step_rule: StepRule::Harmonic,
        }
    }
}

impl FwConfig {
    /// Every violated constraint, each as `field: reason`.
    pub fn problems(&self) -> Vec<String> {
        let mut bad = Vec::new();
        if !(self.delta0 > 0.0 && self.delta0.is_finite()) {
            bad.push(format!("delta0: must be positive and finite, got {}", self.delta0));
        }
        if self.inner_steps == 0 {
            bad.push("inner_steps: must be at least 1".into());
        }
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            bad.push(format!("eta: must be positive and finite, got {}", self.eta));
        }
        if let DeltaSchedule::Harmonic { tau } = self.delta_schedule {
            if !(tau > 0.0 && tau.is_finite()) {
                bad.push(format!("delta_schedule.tau: must be positive, got {tau}"));
            }
        }
        bad
    }

    pub fn validate(&self) -> Result<()> {
        let bad = self.problems();
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidArgument(bad.join("; ")))
        }
    }

    /// Radius for global outer step `t` (from 1) when the learning rate
    /// currently stands at `lr_ratio` times its initial value.
    pub fn delta_at(&self, t: usize, lr_ratio: f64) -> f64 {
        match self.delta_schedule {
            DeltaSchedule::Constant => self.delta0,
            DeltaSchedule::FollowLr => self.delta0 * lr_ratio,
            DeltaSchedule::Harmonic { tau } => self.delta0 / (1.0 + (t.max(1) - 1) as f64 / tau),
        }
    }
}

/// Loss and gradient at a point, for inner iteration `k` (from 1). Whether a
/// new minibatch is drawn for each `k` is up to the implementation.
pub trait GradientOracle {
    fn eval(&mut self, omega: &[f64], k: usize) -> Result<(f64, Vec<f64>)>;
}

impl<F> GradientOracle for F
where
    F: FnMut(&[f64], usize) -> Result<(f64, Vec<f64>)>,
{
    fn eval(&mut self, omega: &[f64], k: usize) -> Result<(f64, Vec<f64>)> {
        self(omega, k)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepReport {
    pub t: usize,
    pub delta: f64,
    /// `||d_k||_p` for `k = 1..K`.
    pub inner_norms: Vec<f64>,
    /// `||grad F(w + d_{k-1})||_2` for `k = 1..K`.
    pub grad_norms: Vec<f64>,
    /// `F(w + d_{k-1})` on the oracle's batch for `k = 1..K`.
    pub inner_losses: Vec<f64>,
    /// Loss at the start of the step (the first inner evaluation).
    pub loss_before: f64,
    /// Filled in by callers that evaluate the loss after the update.
    pub loss_after: Option<f64>,
    pub wall_seconds: f64,
}

impl StepReport {
    /// Largest `||d_k||_p - delta`; at most `1e-9` when the search stayed in the ball.
    pub fn ball_excess(&self) -> f64 {
        self.inner_norms
            .iter()
            .map(|n| n - self.delta)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Runs the inner loop from `omega` and returns `d_K`.
pub fn fw_inner_loop<O: GradientOracle + ?Sized>(
    omega: &[f64],
    oracle: &mut O,
    cfg: &FwConfig,
    t: usize,
    delta: f64,
) -> Result<(Vec<f64>, StepReport)> {
    if cfg.inner_steps == 0 {
        return Err(Error::InvalidArgument("inner_steps must be at least 1".into()));
    }
    let start = Instant::now();
    let n = omega.len();
    let mut d = vec![0.0; n];
    let mut point = omega.to_vec();
    let mut report = StepReport {
        t,
        delta,
        inner_norms: Vec::with_capacity(cfg.inner_steps),
        grad_norms: Vec::with_capacity(cfg.inner_steps),
        inner_losses: Vec::with_capacity(cfg.inner_steps),
        loss_before: f64::NAN,
        loss_after: None,
        wall_seconds: 0.0,
    };
    for k in 1..=cfg.inner_steps {
        if k > 1 {
            for ((x, w), di) in point.iter_mut().zip(omega).zip(&d) {
                *x = w + di;
            }
        }
        let (loss, g) = oracle.eval(&point, k)?;
        if g.len() != n {
            return Err(Error::shape("inner-loop gradient", n, g.len()));
        }
        if !loss.is_finite() || g.iter().any(|v| !v.is_finite()) {
            return Err(Error::non_finite(format!(
                "gradient at outer step {t}, inner iteration {k}"
            )));
        }
        let s = lmo_lp_ball(&g, cfg.p, delta)?.direction;
        let gamma = cfg.step_rule.gamma(k);
        for (di, si) in d.iter_mut().zip(&s) {
            *di = (1.0 - gamma) * *di + gamma * si;
        }
        report.inner_norms.push(norm(&d, cfg.p));
        report.grad_norms.push(l2_norm(&g));
        report.inner_losses.push(loss);
    }
    report.loss_before = report.inner_losses[0];
    report.wall_seconds = start.elapsed().as_secs_f64();
    Ok((d, report))
}

/// Applies `d_K` to `params`: `w += eta * d_K`, or an Adam step on `-d_K`.
pub fn fw_outer_step(
    params: &mut [f64],
    delta_omega: &[f64],
    cfg: &FwConfig,
    adam: Option<&mut AdamState>,
) -> Result<()> {
    if params.len() != delta_omega.len() {
        return Err(Error::shape("fw_outer_step", params.len(), delta_omega.len()));
    }
    match cfg.outer_mode {
        OuterMode::Plain => {
            for (w, d) in params.iter_mut().zip(delta_omega) {
                *w += cfg.eta * d;
            }
            Ok(())
        }
        OuterMode::AdamFed => {
            let adam = adam.ok_or_else(|| {
                Error::InvalidArgument("adam-fed outer mode needs an Adam state".into())
            })?;
            let pseudo: Vec<f64> = delta_omega.iter().map(|d| -d).collect();
            adam.step(params, &pseudo)
        }
    }
}
