//! Experiment runner behind the `fwrnn` CLI: configs, runs, grids, plots
//! and diagnostics.

pub mod config;
pub mod diag;
pub mod grid;
pub mod metrics;
pub mod plot;
pub mod runner;

use thiserror::Error;

pub use config::{load_config, parse_config, ExperimentConfig, ModelConfig, FORMAT_VERSION};
pub use runner::{run_experiment, run_on_dataset, RunOutcome};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    Config(Vec<String>),
    #[error("data error: {0}")]
    Data(fwrnn_core::Error),
    #[error("numeric abort: {0}")]
    Numeric(fwrnn_core::Error),
    /// Unreadable or malformed non-dataset input (metrics files, checkpoints).
    #[error("input error: {0}")]
    Input(String),
    #[error("cannot write output: {0}")]
    Output(String),
}

impl HarnessError {
    /// 0 success, 1 config error, 2 data error, 3 numeric abort.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 1,
            HarnessError::Data(_) | HarnessError::Input(_) | HarnessError::Output(_) => 2,
            HarnessError::Numeric(_) => 3,
        }
    }
}

impl From<fwrnn_core::Error> for HarnessError {
    fn from(e: fwrnn_core::Error) -> Self {
        if e.is_numeric() {
            HarnessError::Numeric(e)
        } else if e.is_data() {
            HarnessError::Data(e)
        } else if let fwrnn_core::Error::Checkpoint(m) = &e {
            HarnessError::Input(m.clone())
        } else {
            HarnessError::Config(vec![e.to_string()])
        }
    }
}

impl From<std::io::Error> for HarnessError {
    fn from(e: std::io::Error) -> Self {
        HarnessError::Output(e.to_string())
    }
}
