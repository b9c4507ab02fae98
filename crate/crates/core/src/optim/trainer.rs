//! Epoch loop shared by every optimizer.
//!
//! One outer step per minibatch (per segment under truncated BPTT); an epoch
//! is one shuffled pass over the training set. Frank-Wolfe inner iterations
//! may draw extra minibatches without advancing the epoch. All randomness
//! comes from streams derived from the run seed:
//!
//! | stream | use                                   |
//! |--------|---------------------------------------|
//! | 0      | weight initialization                 |
//! | 1      | per-epoch shuffling                   |
//! | 2      | fresh minibatches for inner iterations|
//! | 3      | angle-probe subsample                 |

use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::baselines::{clip_gradient, sgd_step, AdamHyper, AdamState};
use super::fw::{fw_inner_loop, fw_outer_step, BatchMode, FwConfig, OuterMode};
use crate::diagnostics::angle_probe;
use crate::models::{tbptt_segments, HiddenState, ModelSpec, ParamSet, SequenceBatch};
use crate::numerics::{derive_seed, l2_norm, Rng};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OptimizerKind {
    Sgd,
    SgdClip,
    /// SGD with one update per truncated-BPTT segment.
    Tbptt,
    Adam,
    Fw,
    #[serde(rename = "fw+tbptt")]
    FwTbptt,
    /// `w -= eta_t * delta_t * g / ||g||_2`, using the `fw` section's `eta`,
    /// `delta0` and schedule: the single-inner-step special case written out.
    NormalizedSgd,
}

impl OptimizerKind {
    pub fn is_fw(self) -> bool {
        matches!(self, OptimizerKind::Fw | OptimizerKind::FwTbptt)
    }

    fn truncated(self) -> bool {
        matches!(self, OptimizerKind::Tbptt | OptimizerKind::FwTbptt)
    }
}

/// Step decay: the learning rate is multiplied by `factor` every `every` epochs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LrDecay {
    pub factor: f64,
    pub every: usize,
}

impl Default for LrDecay {
    fn default() -> Self {
        LrDecay { factor: 1.0, every: 1 }
    }
}

impl LrDecay {
    /// `lr / lr_0` during `epoch` (from 1).
    pub fn ratio(&self, epoch: usize) -> f64 {
        self.factor.powi(((epoch.max(1) - 1) / self.every.max(1)) as i32)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProbeConfig {
    /// Measure the angle between `-grad F` and the applied direction once per epoch.
    pub angle: bool,
    /// Training sequences in the fixed subsample used for `grad F`.
    pub samples: usize,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig { angle: true, samples: 2048 }
    }
}

fn default_eval_chunk() -> usize {
    1024
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub optimizer: OptimizerKind,
    pub epochs: usize,
    pub batch_size: usize,
    /// Learning rate of the baselines. Frank-Wolfe variants use `fw.eta`.
    pub lr: f64,
    #[serde(default)]
    pub lr_decay: LrDecay,
    /// Required by `sgd-clip`; also clips `tbptt` updates when set.
    #[serde(default)]
    pub clip_threshold: Option<f64>,
    /// Segment length for the truncated variants.
    #[serde(default)]
    pub tbptt_len: Option<usize>,
    #[serde(default)]
    pub adam: AdamHyper,
    #[serde(default)]
    pub fw: FwConfig,
    #[serde(default)]
    pub probe: ProbeConfig,
    #[serde(default = "default_eval_chunk")]
    pub eval_chunk: usize,
}

impl TrainConfig {
    /// Every violated constraint, each as `field: reason`.
    pub fn problems(&self) -> Vec<String> {
        let mut bad = Vec::new();
        if self.batch_size == 0 {
            bad.push("batch_size: must be at least 1".to_string());
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            bad.push(format!("lr: must be positive and finite, got {}", self.lr));
        }
        if !(self.lr_decay.factor > 0.0 && self.lr_decay.factor <= 1.0) {
            bad.push(format!("lr_decay.factor: must be in (0, 1], got {}", self.lr_decay.factor));
        }
        if self.lr_decay.every == 0 {
            bad.push("lr_decay.every: must be at least 1".into());
        }
        if self.optimizer == OptimizerKind::SgdClip && self.clip_threshold.is_none() {
            bad.push("clip_threshold: required by sgd-clip".into());
        }
        if let Some(c) = self.clip_threshold {
            if !(c > 0.0) {
                bad.push(format!("clip_threshold: must be positive, got {c}"));
            }
        }
        if self.optimizer.truncated() {
            match self.tbptt_len {
                None => bad.push("tbptt_len: required by truncated optimizers".into()),
                Some(0) => bad.push("tbptt_len: must be at least 1".into()),
                Some(_) => {}
            }
        }
        if self.eval_chunk == 0 {
            bad.push("eval_chunk: must be at least 1".into());
        }
        if self.probe.angle && self.probe.samples == 0 {
            bad.push("probe.samples: must be at least 1".into());
        }
        if self.optimizer.is_fw() || self.optimizer == OptimizerKind::NormalizedSgd {
            bad.extend(self.fw.problems().into_iter().map(|p| format!("fw.{p}")));
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
}

#[derive(Clone, Copy, Debug)]
pub struct TrainData<'a> {
    pub train: &'a SequenceBatch,
    pub validation: Option<&'a SequenceBatch>,
    pub test: &'a SequenceBatch,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainRecord {
    pub epoch: usize,
    /// Mean minibatch loss over the epoch, each taken before its update.
    pub train_loss: f64,
    pub test_loss: f64,
    pub test_accuracy: Option<f64>,
    pub val_loss: Option<f64>,
    pub val_accuracy: Option<f64>,
    pub lr: f64,
    /// Radius in force at the end of the epoch (Frank-Wolfe and normalized SGD).
    pub delta: Option<f64>,
    /// Parameter updates so far.
    pub grad_updates: u64,
    /// Minibatch gradient evaluations so far, inner iterations included.
    pub grad_evals: u64,
    /// Angle between `-grad F` and the applied direction at the epoch's last step.
    pub angle_deg: Option<f64>,
    /// Largest `||d_k||_p - delta_t` seen this epoch.
    pub ball_excess: Option<f64>,
    /// Seconds since training started.
    pub wall_seconds: f64,
}

pub fn train(
    model: &ModelSpec,
    data: TrainData<'_>,
    cfg: &TrainConfig,
    seed: u64,
) -> Result<(ParamSet, Vec<TrainRecord>)> {
    train_with(model, data, cfg, seed, |_| {})
}

/// [`train`], calling `on_epoch` after each epoch's record is complete.
pub fn train_with<F: FnMut(&TrainRecord)>(
    model: &ModelSpec,
    data: TrainData<'_>,
    cfg: &TrainConfig,
    seed: u64,
    mut on_epoch: F,
) -> Result<(ParamSet, Vec<TrainRecord>)> {
    cfg.validate()?;
    model.validate()?;
    let params = model.init_params(&mut Rng::new(derive_seed(seed, 0)))?;
    if cfg.epochs == 0 {
        return Ok((params, Vec::new()));
    }
    let n = data.train.len();
    if n == 0 {
        return Err(Error::InvalidArgument("empty training set".into()));
    }
    let probe = cfg.probe.angle.then(|| {
        let mut rng = Rng::new(derive_seed(seed, 3));
        let mut idx = rng.permutation(n);
        idx.truncate(cfg.probe.samples.min(n));
        idx.sort_unstable();
        data.train.select(&idx)
    });
    let adam = match (cfg.optimizer, cfg.fw.outer_mode) {
        (OptimizerKind::Adam, _) => Some(AdamState::new(params.len(), cfg.lr, cfg.adam)),
        (k, OuterMode::AdamFed) if k.is_fw() => {
            Some(AdamState::new(params.len(), cfg.fw.eta, cfg.adam))
        }
        _ => None,
    };
    let mut run = Run {
        model,
        cfg,
        train: data.train,
        scratch: params.clone(),
        params,
        adam,
        inner_rng: Rng::new(derive_seed(seed, 2)),
        pool: (0..n).collect(),
        t: 0,
        updates: 0,
        evals: 0,
    };
    let mut shuffle = Rng::new(derive_seed(seed, 1));
    let started = Instant::now();
    let mut records = Vec::with_capacity(cfg.epochs);

    for epoch in 1..=cfg.epochs {
        let ratio = cfg.lr_decay.ratio(epoch);
        let order = shuffle.permutation(n);
        let chunks: Vec<&[usize]> = order.chunks(cfg.batch_size).collect();
        let (mut loss_sum, mut loss_weight) = (0.0, 0.0);
        let mut angle = None;
        let mut excess: Option<f64> = None;
        let mut delta = None;
        let abort = |e: Error| Error::StepAborted {
            epoch,
            source: Box::new(e),
        };
        for (bi, idx) in chunks.iter().enumerate() {
            let batch = run.train.select(idx);
            let full_grad = match &probe {
                Some(pb) if bi + 1 == chunks.len() => {
                    Some(model.loss_and_grad(&run.params, pb).map_err(abort)?.1.flatten())
                }
                _ => None,
            };
            let before = full_grad.as_ref().map(|_| run.params.flatten());
            let out = run.step(&batch, ratio).map_err(abort)?;
            loss_sum += out.loss * idx.len() as f64;
            loss_weight += idx.len() as f64;
            if let Some(e) = out.excess {
                excess = Some(excess.map_or(e, |x: f64| x.max(e)));
            }
            delta = out.delta.or(delta);
            if let (Some(g), Some(before)) = (full_grad, before) {
                let dir = out.direction.unwrap_or_else(|| {
                    run.params
                        .flat()
                        .iter()
                        .zip(&before)
                        .map(|(a, b)| a - b)
                        .collect()
                });
                angle = angle_probe(&g, &dir);
            }
        }
        let test = model.evaluate(&run.params, data.test, cfg.eval_chunk).map_err(abort)?;
        let val = match data.validation {
            Some(v) => Some(model.evaluate(&run.params, v, cfg.eval_chunk).map_err(abort)?),
            None => None,
        };
        let base_lr = if cfg.optimizer.is_fw() || cfg.optimizer == OptimizerKind::NormalizedSgd {
            cfg.fw.eta
        } else {
            cfg.lr
        };
        let rec = TrainRecord {
            epoch,
            train_loss: loss_sum / loss_weight,
            test_loss: test.loss,
            test_accuracy: test.accuracy,
            val_loss: val.map(|v| v.loss),
            val_accuracy: val.and_then(|v| v.accuracy),
            lr: base_lr * ratio,
            delta,
            grad_updates: run.updates,
            grad_evals: run.evals,
            angle_deg: angle,
            ball_excess: excess,
            wall_seconds: started.elapsed().as_secs_f64(),
        };
        log::info!(
            "epoch {epoch}: train {:.5} test {:.5} acc {}",
            rec.train_loss,
            rec.test_loss,
            rec.test_accuracy.map_or("-".into(), |a| format!("{:.4}", a))
        );
        on_epoch(&rec);
        records.push(rec);
    }
    Ok((run.params, records))
}

struct StepOut {
    loss: f64,
    /// The Frank-Wolfe direction `d_K`, when there is one.
    direction: Option<Vec<f64>>,
    delta: Option<f64>,
    excess: Option<f64>,
}

struct Run<'a> {
    model: &'a ModelSpec,
    cfg: &'a TrainConfig,
    train: &'a SequenceBatch,
    params: ParamSet,
    scratch: ParamSet,
    adam: Option<AdamState>,
    inner_rng: Rng,
    pool: Vec<usize>,
    t: usize,
    updates: u64,
    evals: u64,
}

/// Loss, flat gradient and final state at `omega`, evaluated in `scratch`.
fn grad_at(
    model: &ModelSpec,
    scratch: &mut ParamSet,
    omega: &[f64],
    batch: &SequenceBatch,
    init: Option<&HiddenState>,
) -> Result<(f64, Vec<f64>, HiddenState)> {
    scratch.assign_flat(omega)?;
    let (loss, grad, state) = model.loss_and_grad_from(scratch, batch, init)?;
    Ok((loss, grad.flatten(), state))
}

/// `b` distinct indices below `pool.len()` by partial Fisher-Yates on a pool
/// that persists between calls.
fn sample_indices(rng: &mut Rng, pool: &mut [usize], b: usize) -> Vec<usize> {
    let n = pool.len();
    let b = b.min(n);
    for i in 0..b {
        let j = i + rng.below((n - i) as u64) as usize;
        pool.swap(i, j);
    }
    pool[..b].to_vec()
}

impl Run<'_> {
    fn step(&mut self, batch: &SequenceBatch, ratio: f64) -> Result<StepOut> {
        let cfg = self.cfg;
        let lr = cfg.lr * ratio;
        match cfg.optimizer {
            OptimizerKind::Sgd | OptimizerKind::SgdClip | OptimizerKind::Adam => {
                self.t += 1;
                let (loss, grad) = self.model.loss_and_grad(&self.params, batch)?;
                self.evals += 1;
                self.apply_gradient(&grad.flatten(), lr)?;
                Ok(StepOut { loss, direction: None, delta: None, excess: None })
            }
            OptimizerKind::NormalizedSgd => {
                self.t += 1;
                let delta = cfg.fw.delta_at(self.t, ratio);
                let eta = cfg.fw.eta * ratio;
                let (loss, grad) = self.model.loss_and_grad(&self.params, batch)?;
                self.evals += 1;
                let g = grad.flatten();
                let norm = l2_norm(&g);
                if !norm.is_finite() {
                    return Err(Error::non_finite("gradient"));
                }
                let mut step = vec![0.0; g.len()];
                if norm > 0.0 {
                    for ((w, gi), si) in self.params.flat_mut().iter_mut().zip(&g).zip(&mut step) {
                        *si = delta * gi / norm;
                        *w -= eta * *si;
                    }
                }
                self.updates += 1;
                // report the step the way the inner loop reports d_1 = -step
                let direction: Vec<f64> = step.iter().map(|s| -s).collect();
                let excess = l2_norm(&direction) - delta;
                Ok(StepOut { loss, direction: Some(direction), delta: Some(delta), excess: Some(excess) })
            }
            OptimizerKind::Tbptt => {
                let segs = tbptt_segments(batch, cfg.tbptt_len.unwrap_or(usize::MAX))?;
                let mut state: Option<HiddenState> = None;
                let mut loss = 0.0;
                for seg in &segs {
                    self.t += 1;
                    let (l, grad, fin) =
                        self.model.loss_and_grad_from(&self.params, &seg.batch, state.as_ref())?;
                    self.evals += 1;
                    self.apply_gradient(&grad.flatten(), lr)?;
                    state = Some(fin);
                    loss = l;
                }
                Ok(StepOut { loss, direction: None, delta: None, excess: None })
            }
            OptimizerKind::Fw => self.fw_step(batch, None, ratio),
            OptimizerKind::FwTbptt => {
                let segs = tbptt_segments(batch, cfg.tbptt_len.unwrap_or(usize::MAX))?;
                let mut state: Option<HiddenState> = None;
                let mut last = None;
                let mut excess = f64::NEG_INFINITY;
                for seg in &segs {
                    let (out, fin) = self.fw_segment(&seg.batch, state.as_ref(), ratio)?;
                    excess = excess.max(out.excess.unwrap_or(f64::NEG_INFINITY));
                    state = Some(fin);
                    last = Some(out);
                }
                let mut out = last.expect("at least one segment");
                out.excess = Some(excess);
                Ok(out)
            }
        }
    }

    /// Baseline update from a minibatch gradient.
    fn apply_gradient(&mut self, g: &[f64], lr: f64) -> Result<()> {
        let cfg = self.cfg;
        match cfg.optimizer {
            OptimizerKind::Adam => {
                let adam = self.adam.as_mut().expect("adam state");
                adam.lr = lr;
                adam.step(self.params.flat_mut(), g)?;
            }
            _ => match cfg.clip_threshold {
                Some(th)
                    if matches!(cfg.optimizer, OptimizerKind::SgdClip | OptimizerKind::Tbptt) =>
                {
                    sgd_step(self.params.flat_mut(), &clip_gradient(g, th)?, lr)?
                }
                _ => sgd_step(self.params.flat_mut(), g, lr)?,
            },
        }
        self.updates += 1;
        Ok(())
    }

    fn fw_step(&mut self, batch: &SequenceBatch, init: Option<&HiddenState>, ratio: f64) -> Result<StepOut> {
        Ok(self.fw_segment(batch, init, ratio)?.0)
    }

    /// One outer step on `batch` started from `init`; also returns the
    /// batch's final hidden state at the pre-update weights.
    fn fw_segment(
        &mut self,
        batch: &SequenceBatch,
        init: Option<&HiddenState>,
        ratio: f64,
    ) -> Result<(StepOut, HiddenState)> {
        self.t += 1;
        let t = self.t;
        let fw = FwConfig {
            eta: self.cfg.fw.eta * ratio,
            ..self.cfg.fw.clone()
        };
        let delta = fw.delta_at(t, ratio);
        // Truncated runs keep every inner iteration on the current segment.
        let fresh = fw.batch_mode == BatchMode::Fresh && !self.cfg.optimizer.truncated();
        let omega = self.params.flatten();
        let model = self.model;
        let train = self.train;
        let bsz = batch.len();
        let (scratch, rng, pool, evals) =
            (&mut self.scratch, &mut self.inner_rng, &mut self.pool, &mut self.evals);
        let mut first_state = None;
        let mut oracle = |w: &[f64], k: usize| -> Result<(f64, Vec<f64>)> {
            *evals += 1;
            if k == 1 || !fresh {
                let (l, g, s) = grad_at(model, scratch, w, batch, init)?;
                if k == 1 {
                    first_state = Some(s);
                }
                Ok((l, g))
            } else {
                let idx = sample_indices(rng, pool, bsz);
                let b = train.select(&idx);
                let (l, g, _) = grad_at(model, scratch, w, &b, None)?;
                Ok((l, g))
            }
        };
        let (d, report) = fw_inner_loop(&omega, &mut oracle, &fw, t, delta)?;
        if let Some(adam) = self.adam.as_mut() {
            adam.lr = fw.eta;
        }
        fw_outer_step(self.params.flat_mut(), &d, &fw, self.adam.as_mut())?;
        self.updates += 1;
        let out = StepOut {
            loss: report.loss_before,
            direction: Some(d),
            delta: Some(delta),
            excess: Some(report.ball_excess()),
        };
        Ok((out, first_state.expect("first inner iteration ran")))
    }
}
