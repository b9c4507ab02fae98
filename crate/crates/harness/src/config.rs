//! Experiment configuration: a versioned TOML document with dotted-key overrides.

use std::path::{Path, PathBuf};

use fwrnn_core::data::{Dataset, DataConfig};
use fwrnn_core::models::{CellKind, InitSpec, LossKind, ModelSpec, Targets};
use fwrnn_core::optim::TrainConfig;
use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use crate::HarnessError;

pub const FORMAT_VERSION: u32 = 1;

/// Everything that determines a run's results, plus where to write them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub format_version: u32,
    #[serde(default)]
    pub name: String,
    pub seed: u64,
    /// Output directory; `--out` takes precedence.
    #[serde(default)]
    pub output: Option<PathBuf>,
    pub data: DataConfig,
    pub model: ModelConfig,
    pub train: TrainConfig,
}

/// Network shape; input and output widths come from the dataset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub cell: CellKind,
    pub hidden_dim: usize,
    #[serde(default = "one")]
    pub layers: usize,
    /// Defaults to MSE for regression data and cross-entropy for classes.
    #[serde(default)]
    pub loss: Option<LossKind>,
    #[serde(default)]
    pub init: InitSpec,
}

fn one() -> usize {
    1
}

impl ModelConfig {
    pub fn resolve(&self, data: &Dataset) -> ModelSpec {
        let classes = data.classes();
        let loss = self.loss.unwrap_or(match classes {
            Some(_) => LossKind::CrossEntropy,
            None => LossKind::Mse,
        });
        let output_dim = match (classes, data.train.targets()) {
            (Some(k), _) => k,
            (None, Targets::Values(m)) => m.cols(),
            (None, Targets::Classes(_)) => 1,
        };
        ModelSpec {
            cell: self.cell,
            input_dim: data.spec.input_dim,
            hidden_dim: self.hidden_dim,
            output_dim,
            layers: self.layers,
            loss,
            init: self.init.clone(),
        }
    }
}

impl ExperimentConfig {
    /// Every invalid setting, each prefixed with its dotted key.
    pub fn problems(&self) -> Vec<String> {
        let mut bad = Vec::new();
        if self.format_version != FORMAT_VERSION {
            bad.push(format!(
                "format_version: {} unsupported (expected {FORMAT_VERSION})",
                self.format_version
            ));
        }
        if self.seed > i64::MAX as u64 {
            bad.push(format!("seed: {} exceeds {}", self.seed, i64::MAX));
        }
        if self.model.hidden_dim == 0 {
            bad.push("model.hidden_dim: must be at least 1".into());
        }
        if self.model.layers == 0 {
            bad.push("model.layers: must be at least 1".into());
        }
        bad.extend(self.data.problems());
        bad.extend(self.train.problems().into_iter().map(|p| format!("train.{p}")));
        bad
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }
}

/// Parses config text, applying `key=value` overrides before validation.
pub fn parse_config(text: &str, overrides: &[String]) -> Result<ExperimentConfig, HarnessError> {
    let mut table: Table = text
        .parse()
        .map_err(|e: toml::de::Error| HarnessError::Config(vec![e.message().to_string()]))?;
    for o in overrides {
        apply_override(&mut table, o)?;
    }
    from_table(table)
}

pub fn load_config(path: &Path, overrides: &[String]) -> Result<ExperimentConfig, HarnessError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| HarnessError::Config(vec![format!("{}: {e}", path.display())]))?;
    parse_config(&text, overrides)
}

pub fn from_table(table: Table) -> Result<ExperimentConfig, HarnessError> {
    match table.get("format_version") {
        Some(Value::Integer(v)) if *v == i64::from(FORMAT_VERSION) => {}
        Some(v) => {
            return Err(HarnessError::Config(vec![format!(
                "format_version: {v} unsupported (expected {FORMAT_VERSION})"
            )]))
        }
        None => return Err(HarnessError::Config(vec!["format_version: missing".into()])),
    }
    let cfg: ExperimentConfig = table
        .try_into()
        .map_err(|e: toml::de::Error| HarnessError::Config(vec![e.message().to_string()]))?;
    let bad = cfg.problems();
    if bad.is_empty() {
        Ok(cfg)
    } else {
        Err(HarnessError::Config(bad))
    }
}

/// Sets a dotted key, e.g. `train.fw.inner_steps=5`. The value is read as a
/// TOML value when it parses as one, otherwise as a bare string.
pub fn apply_override(table: &mut Table, spec: &str) -> Result<(), HarnessError> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| HarnessError::Config(vec![format!("override {spec:?}: expected key=value")]))?;
    let value = parse_value(raw.trim());
    set_path(table, key.trim(), value)
}

pub fn parse_value(raw: &str) -> Value {
    format!("v = {raw}")
        .parse::<Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(raw.to_string()))
}

pub fn set_path(table: &mut Table, key: &str, value: Value) -> Result<(), HarnessError> {
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(HarnessError::Config(vec![format!("override key {key:?} is malformed")]));
    }
    let mut cur = table;
    for (i, part) in parts[..parts.len() - 1].iter().enumerate() {
        let entry = cur
            .entry(part.to_string())
            .or_insert_with(|| Value::Table(Table::new()));
        cur = match entry {
            Value::Table(t) => t,
            _ => {
                return Err(HarnessError::Config(vec![format!(
                    "override {key}: {} is not a table",
                    parts[..=i].join(".")
                )]))
            }
        };
    }
    cur.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}
