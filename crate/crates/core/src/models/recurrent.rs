//! Stacked recurrent networks with a linear readout on the last layer's final state.
//!
//! Layer `l` at step `m`:
//!
//! ```text
//! vanilla: z_m = tanh(W x_m + U z_{m-1} + b)
//! indrnn:  z_m = relu(W x_m + u * z_{m-1} + b)      (elementwise recurrence)
//! ```
//!
//! where `x_m` is the sequence input for the first layer and the state of the
//! layer below otherwise. The output is `V z_M + c` on the top layer. Batches
//! are processed row-wise: every state is a `batch x hidden` row-major block.

use serde::{Deserialize, Serialize};

use super::loss::{self, LossKind};
use super::{ParamGroup, ParamSet, SequenceBatch};
use crate::numerics::{gemm, MatRef, Matrix, Rng};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CellKind {
    /// Full recurrent matrix, tanh activation.
    Vanilla,
    /// Per-neuron recurrent weight, ReLU activation.
    Indrnn,
}

/// Uniform initialization ranges. Biases start at zero.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitSpec {
    /// Bound for input and readout weights; `None` means `1/sqrt(hidden)`.
    pub weight_bound: Option<f64>,
    /// Bound for the vanilla recurrent matrix; `None` means `1/sqrt(hidden)`.
    pub recurrent_bound: Option<f64>,
    /// Range of the IndRNN recurrent vector.
    pub indrnn_u_low: f64,
    pub indrnn_u_high: f64,
}

impl Default for InitSpec {
    fn default() -> Self {
        InitSpec {
            weight_bound: None,
            recurrent_bound: None,
            indrnn_u_low: 0.0,
            indrnn_u_high: 1.0,
        }
    }
}

fn default_layers() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub cell: CellKind,
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub output_dim: usize,
    #[serde(default = "default_layers")]
    pub layers: usize,
    pub loss: LossKind,
    #[serde(default)]
    pub init: InitSpec,
}

/// Hidden state of every layer, each `batch x hidden` row-major.
pub type HiddenState = Vec<Vec<f64>>;

/// Everything the backward pass needs from a forward pass.
#[derive(Clone, Debug)]
pub struct ForwardTrace {
    batch: usize,
    hidden: usize,
    steps: usize,
    /// per layer, `steps + 1` blocks; block 0 is the initial state
    states: Vec<Vec<f64>>,
    /// per layer, `steps` blocks; block `m - 1` is the pre-activation at step `m`
    preacts: Vec<Vec<f64>>,
    pub output: Matrix,
    pub loss: f64,
}

impl ForwardTrace {
    fn block(&self) -> usize {
        self.batch * self.hidden
    }

    /// `z_m` of `layer`, `m = 0..=steps`.
    pub fn state(&self, layer: usize, m: usize) -> &[f64] {
        let n = self.block();
        &self.states[layer][m * n..(m + 1) * n]
    }

    /// Pre-activation of `layer` at step `m = 1..=steps`.
    pub fn preact(&self, layer: usize, m: usize) -> &[f64] {
        let n = self.block();
        &self.preacts[layer][(m - 1) * n..m * n]
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn layers(&self) -> usize {
        self.states.len()
    }

    pub fn final_state(&self) -> HiddenState {
        (0..self.layers())
            .map(|l| self.state(l, self.steps).to_vec())
            .collect()
    }
}

/// Indices of one layer's tensors inside the parameter set.
#[derive(Clone, Copy, Debug)]
struct LayerSlots {
    w: usize,
    rec: usize,
    b: usize,
    input: usize,
}

impl ModelSpec {
    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        if self.input_dim == 0 {
            bad.push("input_dim must be positive");
        }
        if self.hidden_dim == 0 {
            bad.push("hidden_dim must be positive");
        }
        if self.output_dim == 0 {
            bad.push("output_dim must be positive");
        }
        if self.layers == 0 {
            bad.push("layers must be positive");
        }
        if self.init.indrnn_u_low > self.init.indrnn_u_high {
            bad.push("indrnn_u_low exceeds indrnn_u_high");
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidArgument(bad.join("; ")))
        }
    }

    fn rec_name(&self) -> &'static str {
        match self.cell {
            CellKind::Vanilla => "U",
            CellKind::Indrnn => "u",
        }
    }

    /// Seeded initial weights.
    pub fn init_params(&self, rng: &mut Rng) -> Result<ParamSet> {
        self.validate()?;
        let h = self.hidden_dim;
        let default_bound = 1.0 / (h as f64).sqrt();
        let wb = self.init.weight_bound.unwrap_or(default_bound);
        let rb = self.init.recurrent_bound.unwrap_or(default_bound);
        let mut uniform = |rows: usize, cols: usize, lo: f64, hi: f64| {
            let data = (0..rows * cols).map(|_| rng.uniform_range(lo, hi)).collect();
            Matrix::from_vec(rows, cols, data)
        };
        let mut p = ParamSet::new();
        for l in 0..self.layers {
            let input = if l == 0 { self.input_dim } else { h };
            p.push(format!("l{l}.W"), ParamGroup::Transition, uniform(h, input, -wb, wb)?)?;
            let rec = match self.cell {
                CellKind::Vanilla => uniform(h, h, -rb, rb)?,
                CellKind::Indrnn => {
                    uniform(1, h, self.init.indrnn_u_low, self.init.indrnn_u_high)?
                }
            };
            p.push(format!("l{l}.{}", self.rec_name()), ParamGroup::Transition, rec)?;
            p.push(format!("l{l}.b"), ParamGroup::Transition, Matrix::zeros(1, h))?;
        }
        p.push("out.V", ParamGroup::Readout, uniform(self.output_dim, h, -wb, wb)?)?;
        p.push("out.c", ParamGroup::Readout, Matrix::zeros(1, self.output_dim))?;
        Ok(p)
    }

    /// All-zero weights with this model's layout.
    pub fn zero_params(&self) -> Result<ParamSet> {
        let mut rng = Rng::new(0);
        Ok(self.init_params(&mut rng)?.zeros_like())
    }

    fn slots(&self, params: &ParamSet) -> Result<(Vec<LayerSlots>, usize, usize)> {
        let h = self.hidden_dim;
        let find = |name: String, rows: usize, cols: usize| -> Result<usize> {
            let i = params
                .index_of(&name)
                .ok_or_else(|| Error::InvalidArgument(format!("missing parameter {name}")))?;
            let e = &params.entries()[i];
            if (e.rows, e.cols) != (rows, cols) {
                return Err(Error::shape(
                    "parameter shape",
                    format!("{name} {rows}x{cols}"),
                    format!("{}x{}", e.rows, e.cols),
                ));
            }
            Ok(i)
        };
        let mut layers = Vec::with_capacity(self.layers);
        for l in 0..self.layers {
            let input = if l == 0 { self.input_dim } else { h };
            let (rr, rc) = match self.cell {
                CellKind::Vanilla => (h, h),
                CellKind::Indrnn => (1, h),
            };
            layers.push(LayerSlots {
                w: find(format!("l{l}.W"), h, input)?,
                rec: find(format!("l{l}.{}", self.rec_name()), rr, rc)?,
                b: find(format!("l{l}.b"), 1, h)?,
                input,
            });
        }
        let v = find("out.V".into(), self.output_dim, h)?;
        let c = find("out.c".into(), 1, self.output_dim)?;
        Ok((layers, v, c))
    }

    fn check_batch(&self, batch: &SequenceBatch, init: Option<&HiddenState>) -> Result<()> {
        if batch.input_dim() != self.input_dim {
            return Err(Error::shape("batch input_dim", self.input_dim, batch.input_dim()));
        }
        if let Some(s) = init {
            let n = batch.len() * self.hidden_dim;
            if s.len() != self.layers || s.iter().any(|x| x.len() != n) {
                return Err(Error::shape("initial state", self.layers, s.len()));
            }
        }
        Ok(())
    }

    /// Forward pass from a zero initial state.
    pub fn forward(&self, params: &ParamSet, batch: &SequenceBatch) -> Result<ForwardTrace> {
        self.forward_from(params, batch, None)
    }

    /// Forward pass from `init` (zero when `None`).
    pub fn forward_from(
        &self,
        params: &ParamSet,
        batch: &SequenceBatch,
        init: Option<&HiddenState>,
    ) -> Result<ForwardTrace> {
        self.check_batch(batch, init)?;
        let (slots, v, c) = self.slots(params)?;
        let (bsz, h, steps) = (batch.len(), self.hidden_dim, batch.steps());
        let n = bsz * h;
        let mut states: Vec<Vec<f64>> = (0..self.layers)
            .map(|l| {
                let mut s = vec![0.0; (steps + 1) * n];
                if let Some(init) = init {
                    s[..n].copy_from_slice(&init[l]);
                }
                s
            })
            .collect();
        let mut preacts: Vec<Vec<f64>> = (0..self.layers).map(|_| vec![0.0; steps * n]).collect();

        for m in 1..=steps {
            for (l, sl) in slots.iter().enumerate() {
                let (below, this) = states.split_at_mut(l);
                let this = &mut this[0];
                let (prev_part, cur_part) = this.split_at_mut(m * n);
                let prev = &prev_part[(m - 1) * n..];
                let cur = &mut cur_part[..n];
                let pre = &mut preacts[l][(m - 1) * n..m * n];
                let input = if l == 0 {
                    batch.step_view(m - 1)
                } else {
                    MatRef::new(&below[l - 1][m * n..(m + 1) * n], bsz, h)
                };
                self.step(params, sl, input, prev, pre, bsz)?;
                self.activate(pre, cur);
                if cur.iter().any(|x| !x.is_finite()) {
                    return Err(Error::Overflow { step: m, layer: l });
                }
            }
        }

        let top = &states[self.layers - 1][steps * n..];
        let output = self.readout(params, v, c, top, bsz)?;
        let (loss, _) = loss::loss_and_grad(self.loss, &output, batch.targets())?;
        Ok(ForwardTrace {
            batch: bsz,
            hidden: h,
            steps,
            states,
            preacts,
            output,
            loss,
        })
    }

    /// Pre-activation `input W^T + recurrence + b` into `pre`.
    fn step(
        &self,
        params: &ParamSet,
        sl: &LayerSlots,
        input: MatRef<'_>,
        prev: &[f64],
        pre: &mut [f64],
        bsz: usize,
    ) -> Result<()> {
        let h = self.hidden_dim;
        let bias = params.slot(sl.b);
        for row in pre.chunks_exact_mut(h) {
            row.copy_from_slice(bias);
        }
        gemm(1.0, input, MatRef::new(params.slot(sl.w), h, sl.input).t(), 1.0, pre);
        match self.cell {
            CellKind::Vanilla => gemm(
                1.0,
                MatRef::new(prev, bsz, h),
                MatRef::new(params.slot(sl.rec), h, h).t(),
                1.0,
                pre,
            ),
            CellKind::Indrnn => {
                let u = params.slot(sl.rec);
                for (row, prow) in pre.chunks_exact_mut(h).zip(prev.chunks_exact(h)) {
                    for ((p, &z), &ui) in row.iter_mut().zip(prow).zip(u) {
                        *p += ui * z;
                    }
                }
            }
        }
        Ok(())
    }

    fn activate(&self, pre: &[f64], out: &mut [f64]) {
        match self.cell {
            CellKind::Vanilla => out.iter_mut().zip(pre).for_each(|(z, &a)| *z = a.tanh()),
            CellKind::Indrnn => out.iter_mut().zip(pre).for_each(|(z, &a)| *z = a.max(0.0)),
        }
    }

    /// `dA = dZ * act'(.)` in place.
    fn activation_backward(&self, dz: &mut [f64], pre: &[f64], z: &[f64]) {
        match self.cell {
            CellKind::Vanilla => dz.iter_mut().zip(z).for_each(|(d, &zi)| *d *= 1.0 - zi * zi),
            CellKind::Indrnn => dz.iter_mut().zip(pre).for_each(|(d, &a)| {
                if a <= 0.0 {
                    *d = 0.0
                }
            }),
        }
    }

    fn readout(&self, params: &ParamSet, v: usize, c: usize, top: &[f64], bsz: usize) -> Result<Matrix> {
        let (h, k) = (self.hidden_dim, self.output_dim);
        let mut out = vec![0.0; bsz * k];
        for row in out.chunks_exact_mut(k) {
            row.copy_from_slice(params.slot(c));
        }
        gemm(
            1.0,
            MatRef::new(top, bsz, h),
            MatRef::new(params.slot(v), k, h).t(),
            1.0,
            &mut out,
        );
        Matrix::from_vec(bsz, k, out).map_err(|_| Error::non_finite("network output"))
    }

    /// Batch loss and exact gradient, zero initial state.
    pub fn loss_and_grad(&self, params: &ParamSet, batch: &SequenceBatch) -> Result<(f64, ParamSet)> {
        let (loss, grad, _) = self.loss_and_grad_from(params, batch, None)?;
        Ok((loss, grad))
    }

    /// Loss at the end of `batch` and the gradient through its steps only;
    /// `init` is treated as a constant. Also returns the final state.
    pub fn loss_and_grad_from(
        &self,
        params: &ParamSet,
        batch: &SequenceBatch,
        init: Option<&HiddenState>,
    ) -> Result<(f64, ParamSet, HiddenState)> {
        let trace = self.forward_from(params, batch, init)?;
        let grad = self.backward(params, batch, &trace)?;
        Ok((trace.loss, grad, trace.final_state()))
    }

    /// Backpropagation through time over a recorded trace.
    pub fn backward(
        &self,
        params: &ParamSet,
        batch: &SequenceBatch,
        trace: &ForwardTrace,
    ) -> Result<ParamSet> {
        let (slots, v, c) = self.slots(params)?;
        let (bsz, h, k, steps) = (batch.len(), self.hidden_dim, self.output_dim, trace.steps);
        let n = bsz * h;
        let top = self.layers - 1;
        let mut grad = params.zeros_like();

        let (_, d_out) = loss::loss_and_grad(self.loss, &trace.output, batch.targets())?;
        // readout
        gemm(
            1.0,
            MatRef::new(d_out.as_slice(), bsz, k).t(),
            MatRef::new(trace.state(top, steps), bsz, h),
            1.0,
            grad.slot_mut(v),
        );
        col_sum_into(d_out.as_slice(), k, grad.slot_mut(c));

        let mut carry: Vec<Vec<f64>> = vec![vec![0.0; n]; self.layers];
        gemm(
            1.0,
            MatRef::new(d_out.as_slice(), bsz, k),
            MatRef::new(params.slot(v), k, h),
            0.0,
            &mut carry[top],
        );

        let mut from_above = vec![0.0; n];
        let mut tmp = vec![0.0; n];
        for m in (1..=steps).rev() {
            for l in (0..self.layers).rev() {
                let sl = slots[l];
                let mut da = std::mem::take(&mut carry[l]);
                if l < top {
                    da.iter_mut().zip(&from_above).for_each(|(d, a)| *d += a);
                }
                self.activation_backward(&mut da, trace.preact(l, m), trace.state(l, m));

                let da_t = MatRef::new(&da, bsz, h).t();
                let input = if l == 0 {
                    batch.step_view(m - 1)
                } else {
                    MatRef::new(trace.state(l - 1, m), bsz, h)
                };
                gemm(1.0, da_t, input, 1.0, grad.slot_mut(sl.w));
                col_sum_into(&da, h, grad.slot_mut(sl.b));

                let prev = trace.state(l, m - 1);
                match self.cell {
                    CellKind::Vanilla => {
                        gemm(1.0, da_t, MatRef::new(prev, bsz, h), 1.0, grad.slot_mut(sl.rec));
                        gemm(
                            1.0,
                            MatRef::new(&da, bsz, h),
                            MatRef::new(params.slot(sl.rec), h, h),
                            0.0,
                            &mut tmp,
                        );
                    }
                    CellKind::Indrnn => {
                        let gu = grad.slot_mut(sl.rec);
                        for (drow, prow) in da.chunks_exact(h).zip(prev.chunks_exact(h)) {
                            for ((g, &d), &z) in gu.iter_mut().zip(drow).zip(prow) {
                                *g += d * z;
                            }
                        }
                        let u = params.slot(sl.rec);
                        for (trow, drow) in tmp.chunks_exact_mut(h).zip(da.chunks_exact(h)) {
                            for ((t, &d), &ui) in trow.iter_mut().zip(drow).zip(u) {
                                *t = d * ui;
                            }
                        }
                    }
                }
                if l > 0 {
                    gemm(
                        1.0,
                        MatRef::new(&da, bsz, h),
                        MatRef::new(params.slot(sl.w), h, sl.input),
                        0.0,
                        &mut from_above,
                    );
                }
                // reuse the taken buffer for the next step's carry
                std::mem::swap(&mut da, &mut tmp);
                carry[l] = da;
            }
        }
        if grad.flat().iter().any(|g| !g.is_finite()) {
            return Err(Error::non_finite("gradient"));
        }
        Ok(grad)
    }

    /// Network outputs without keeping the trace.
    pub fn predict(&self, params: &ParamSet, batch: &SequenceBatch) -> Result<Matrix> {
        self.check_batch(batch, None)?;
        let (slots, v, c) = self.slots(params)?;
        let (bsz, h) = (batch.len(), self.hidden_dim);
        let n = bsz * h;
        let mut prev: Vec<Vec<f64>> = vec![vec![0.0; n]; self.layers];
        let mut cur: Vec<Vec<f64>> = vec![vec![0.0; n]; self.layers];
        let mut pre = vec![0.0; n];
        for m in 1..=batch.steps() {
            for (l, sl) in slots.iter().enumerate() {
                let input = if l == 0 {
                    batch.step_view(m - 1)
                } else {
                    MatRef::new(&cur[l - 1], bsz, h)
                };
                self.step(params, sl, input, &prev[l], &mut pre, bsz)?;
                self.activate(&pre, &mut cur[l]);
                if cur[l].iter().any(|x| !x.is_finite()) {
                    return Err(Error::Overflow { step: m, layer: l });
                }
            }
            std::mem::swap(&mut prev, &mut cur);
        }
        self.readout(params, v, c, &prev[self.layers - 1], bsz)
    }

    /// Mean loss and accuracy over a (possibly large) set, `chunk` sequences at a time.
    pub fn evaluate(&self, params: &ParamSet, data: &SequenceBatch, chunk: usize) -> Result<EvalMetrics> {
        let chunk = chunk.max(1);
        let mut loss_sum = 0.0;
        let mut correct = 0usize;
        let mut classified = true;
        let idx: Vec<usize> = (0..data.len()).collect();
        for part in idx.chunks(chunk) {
            let b = data.select(part);
            let out = self.predict(params, &b)?;
            let (l, _) = loss::loss_and_grad(self.loss, &out, b.targets())?;
            loss_sum += l * part.len() as f64;
            match loss::correct_count(&out, b.targets()) {
                Some(c) => correct += c,
                None => classified = false,
            }
        }
        let n = data.len().max(1) as f64;
        Ok(EvalMetrics {
            loss: loss_sum / n,
            accuracy: classified.then(|| correct as f64 / n),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvalMetrics {
    pub loss: f64,
    /// Fraction correct for classification data.
    pub accuracy: Option<f64>,
}

fn col_sum_into(m: &[f64], cols: usize, out: &mut [f64]) {
    for row in m.chunks_exact(cols) {
        out.iter_mut().zip(row).for_each(|(o, r)| *o += r);
    }
}
