//! The two-loop Frank-Wolfe optimizer, the baselines it is compared with, and
//! the epoch-based training driver.

mod baselines;
mod fw;
mod trainer;

pub use baselines::{adam_step, clip_gradient, clip_step, sgd_step, AdamHyper, AdamState};
pub use fw::{
    fw_inner_loop, fw_outer_step, BatchMode, DeltaSchedule, FwConfig, GradientOracle, OuterMode,
    StepReport, StepRule,
};
pub use trainer::{
    train, train_with, LrDecay, OptimizerKind, ProbeConfig, TrainConfig, TrainData, TrainRecord,
};
