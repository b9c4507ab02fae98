//! One experiment: load data, train, write metrics, checkpoint and plot.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use fwrnn_core::data::{Dataset, DatasetSpec};
use fwrnn_core::models::checkpoint::write_checkpoint;
use fwrnn_core::models::{ModelSpec, ParamSet};
use fwrnn_core::optim::{train_with, TrainData, TrainRecord};

use crate::config::ExperimentConfig;
use crate::metrics::MetricsWriter;
use crate::plot::{render_svg, Series};
use crate::HarnessError;

pub const METRICS_FILE: &str = "metrics.csv";
pub const RESOLVED_FILE: &str = "config.resolved";
pub const DATASET_FILE: &str = "dataset.toml";
pub const CHECKPOINT_FILE: &str = "checkpoint.bin";
pub const PLOT_FILE: &str = "curves.svg";

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub out: PathBuf,
    pub model: ModelSpec,
    pub dataset: DatasetSpec,
    pub params: ParamSet,
    pub records: Vec<TrainRecord>,
}

/// Output directory: `--out` first, then the config's `output`.
pub fn output_dir(cfg: &ExperimentConfig, out: Option<&Path>) -> Result<PathBuf, HarnessError> {
    out.map(Path::to_path_buf)
        .or_else(|| cfg.output.clone())
        .ok_or_else(|| HarnessError::Config(vec!["output: no output directory (set `output` or pass --out)".into()]))
}

pub fn run_experiment(
    cfg: &ExperimentConfig,
    out: Option<&Path>,
    dataset_root: Option<&Path>,
) -> Result<RunOutcome, HarnessError> {
    let out = output_dir(cfg, out)?;
    fs::create_dir_all(&out)?;
    fs::write(out.join(RESOLVED_FILE), cfg.to_toml())?;
    let ds = cfg.data.load(dataset_root)?;
    run_on_dataset(cfg, &ds, &out)
}

/// Trains on an already loaded dataset; `cfg.data` is recorded but not reloaded.
pub fn run_on_dataset(cfg: &ExperimentConfig, ds: &Dataset, out: &Path) -> Result<RunOutcome, HarnessError> {
    let bad = cfg.problems();
    if !bad.is_empty() {
        return Err(HarnessError::Config(bad));
    }
    fs::create_dir_all(out)?;
    fs::write(out.join(RESOLVED_FILE), cfg.to_toml())?;
    fs::write(
        out.join(DATASET_FILE),
        toml::to_string_pretty(&ds.spec).map_err(|e| HarnessError::Output(e.to_string()))?,
    )?;
    let model = cfg.model.resolve(ds);
    model.validate()?;
    let mut writer = MetricsWriter::new(BufWriter::new(File::create(out.join(METRICS_FILE))?))?;
    let mut write_err = None;
    let data = TrainData {
        train: &ds.train,
        validation: ds.validation.as_ref(),
        test: &ds.test,
    };
    let label = if cfg.name.is_empty() { "run".to_string() } else { cfg.name.clone() };
    let mut seen = Vec::new();
    let result = train_with(&model, data, &cfg.train, cfg.seed, |r| {
        if write_err.is_none() {
            write_err = writer.push(r).err();
        }
        seen.push(r.clone());
    });
    drop(writer);
    // the plot covers whatever finished, even when training aborted
    fs::write(out.join(PLOT_FILE), render_svg(&[Series::from_records(&label, &seen)]))?;
    let (params, records) = result?;
    if let Some(e) = write_err {
        return Err(e);
    }
    write_checkpoint(&params, BufWriter::new(File::create(out.join(CHECKPOINT_FILE))?))?;
    Ok(RunOutcome {
        out: out.to_path_buf(),
        model,
        dataset: ds.spec.clone(),
        params,
        records,
    })
}
