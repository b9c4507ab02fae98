//! Recurrent models, losses, parameter storage and checkpoints.

mod batch;
pub mod checkpoint;
mod loss;
mod params;
mod recurrent;
mod tbptt;

pub use batch::{SequenceBatch, Targets};
pub use loss::{correct_count, loss_and_grad, predicted_classes, LossKind};
pub use params::{ParamEntry, ParamGroup, ParamSet};
pub use recurrent::{CellKind, EvalMetrics, ForwardTrace, HiddenState, InitSpec, ModelSpec};
pub use tbptt::{tbptt_segments, Segment};

use crate::{Error, Result};

fn require(spec: &ModelSpec, cell: CellKind) -> Result<()> {
    if spec.cell == cell {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "expected a {cell:?} model, got {:?}",
            spec.cell
        )))
    }
}

/// Forward pass of a vanilla tanh network.
pub fn rnn_forward(spec: &ModelSpec, params: &ParamSet, batch: &SequenceBatch) -> Result<ForwardTrace> {
    require(spec, CellKind::Vanilla)?;
    spec.forward(params, batch)
}

/// Loss and full-sequence gradient of a vanilla tanh network.
pub fn rnn_bptt(spec: &ModelSpec, params: &ParamSet, batch: &SequenceBatch) -> Result<(f64, ParamSet)> {
    require(spec, CellKind::Vanilla)?;
    spec.loss_and_grad(params, batch)
}

/// Forward pass of an IndRNN stack.
pub fn indrnn_forward(spec: &ModelSpec, params: &ParamSet, batch: &SequenceBatch) -> Result<ForwardTrace> {
    require(spec, CellKind::Indrnn)?;
    spec.forward(params, batch)
}

/// Loss and full-sequence gradient of an IndRNN stack.
pub fn indrnn_bptt(spec: &ModelSpec, params: &ParamSet, batch: &SequenceBatch) -> Result<(f64, ParamSet)> {
    require(spec, CellKind::Indrnn)?;
    spec.loss_and_grad(params, batch)
}
