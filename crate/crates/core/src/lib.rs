//! Frank-Wolfe trajectory training for recurrent networks.
//!
//! The optimizer runs a short projection-free inner loop that searches for a
//! good update direction inside a small `l_p` ball around the current weights,
//! then applies that direction in an outer loop. Alongside it live the usual
//! baselines (SGD, clipped SGD, truncated BPTT, Adam), the sequence benchmarks
//! they are compared on, and a few probes of the convergence assumptions.
//!
//! Module map:
//! - [`numerics`]: dense matrices, `l_p` norms, the seeded generator.
//! - [`lmo`]: closed-form linear minimization over `l_p` balls.
//! - [`models`]: vanilla RNN and IndRNN cells, exact BPTT, TBPTT segmenting.
//! - [`optim`]: the two-loop optimizer, baselines and the training driver.
//! - [`data`]: adding task, pixel MNIST, HAR-2 and its noisy variant.
//! - [`diagnostics`]: angle, curvature and inexactness probes.

pub mod data;
pub mod diagnostics;
mod error;
pub mod lmo;
pub mod models;
pub mod numerics;
pub mod optim;

pub use error::{Error, Result};
