use crate::numerics::{MatRef, Matrix};
use crate::{Error, Result};

/// Supervision for a batch of sequences.
#[derive(Clone, Debug, PartialEq)]
pub enum Targets {
    /// One class index per sequence.
    Classes(Vec<usize>),
    /// One regression row per sequence (`batch x output_dim`).
    Values(Matrix),
}

impl Targets {
    pub fn len(&self) -> usize {
        match self {
            Targets::Classes(c) => c.len(),
            Targets::Values(m) => m.rows(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn select(&self, idx: &[usize]) -> Targets {
        match self {
            Targets::Classes(c) => Targets::Classes(idx.iter().map(|&i| c[i]).collect()),
            Targets::Values(m) => {
                let mut data = Vec::with_capacity(idx.len() * m.cols());
                for &i in idx {
                    data.extend_from_slice(m.row(i));
                }
                Targets::Values(Matrix::from_vec(idx.len(), m.cols(), data).expect("finite rows"))
            }
        }
    }
}

/// A batch of equal-length sequences, stored `[sample][step][feature]`.
#[derive(Clone, Debug, PartialEq)]
pub struct SequenceBatch {
    inputs: Vec<f64>,
    batch: usize,
    steps: usize,
    input_dim: usize,
    targets: Targets,
}

impl SequenceBatch {
    pub fn new(
        inputs: Vec<f64>,
        batch: usize,
        steps: usize,
        input_dim: usize,
        targets: Targets,
    ) -> Result<Self> {
        if inputs.len() != batch * steps * input_dim {
            return Err(Error::shape(
                "SequenceBatch::new",
                format!("{batch}x{steps}x{input_dim}"),
                format!("{} values", inputs.len()),
            ));
        }
        if targets.len() != batch {
            return Err(Error::shape("SequenceBatch targets", batch, targets.len()));
        }
        if inputs.iter().any(|v| !v.is_finite()) {
            return Err(Error::non_finite("sequence inputs"));
        }
        Ok(SequenceBatch {
            inputs,
            batch,
            steps,
            input_dim,
            targets,
        })
    }

    pub fn len(&self) -> usize {
        self.batch
    }

    pub fn is_empty(&self) -> bool {
        self.batch == 0
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn targets(&self) -> &Targets {
        &self.targets
    }

    pub fn inputs(&self) -> &[f64] {
        &self.inputs
    }

    pub(crate) fn inputs_mut(&mut self) -> &mut [f64] {
        &mut self.inputs
    }

    /// Input vector of `sample` at 0-based step `t`.
    pub fn input_at(&self, sample: usize, t: usize) -> &[f64] {
        let start = (sample * self.steps + t) * self.input_dim;
        &self.inputs[start..start + self.input_dim]
    }

    /// All samples' inputs at 0-based step `t` as a strided `batch x input_dim` view.
    pub fn step_view(&self, t: usize) -> MatRef<'_> {
        let start = t * self.input_dim;
        MatRef::strided(
            &self.inputs[start..],
            self.batch,
            self.input_dim,
            self.steps * self.input_dim,
        )
    }

    /// Sub-batch of the given samples, in the given order.
    pub fn select(&self, idx: &[usize]) -> SequenceBatch {
        let per = self.steps * self.input_dim;
        let mut inputs = Vec::with_capacity(idx.len() * per);
        for &i in idx {
            inputs.extend_from_slice(&self.inputs[i * per..(i + 1) * per]);
        }
        SequenceBatch {
            inputs,
            batch: idx.len(),
            steps: self.steps,
            input_dim: self.input_dim,
            targets: self.targets.select(idx),
        }
    }

    /// Steps `start..start + len` of every sequence; targets are kept.
    pub fn time_slice(&self, start: usize, len: usize) -> Result<SequenceBatch> {
        if start + len > self.steps {
            return Err(Error::shape("time_slice", self.steps, start + len));
        }
        let mut inputs = Vec::with_capacity(self.batch * len * self.input_dim);
        for b in 0..self.batch {
            let from = (b * self.steps + start) * self.input_dim;
            inputs.extend_from_slice(&self.inputs[from..from + len * self.input_dim]);
        }
        Ok(SequenceBatch {
            inputs,
            batch: self.batch,
            steps: len,
            input_dim: self.input_dim,
            targets: self.targets.clone(),
        })
    }

    /// Same inputs, different supervision.
    pub fn with_targets(&self, targets: Targets) -> Result<SequenceBatch> {
        SequenceBatch::new(
            self.inputs.clone(),
            self.batch,
            self.steps,
            self.input_dim,
            targets,
        )
    }
}
