use std::fs::{self, File};
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fwrnn_core::data::{adding_cache_path, load_or_generate_adding, DatasetName};
use fwrnn_core::models::checkpoint::read_checkpoint;
use fwrnn_core::numerics::derive_seed;
use fwrnn_harness::config::{apply_override, from_table};
use fwrnn_harness::diag::{angle_summary, format_report, local_probe};
use fwrnn_harness::grid::{parse_grid, run_grid};
use fwrnn_harness::plot::{render_svg, Series};
use fwrnn_harness::runner::{output_dir, run_experiment, CHECKPOINT_FILE};
use fwrnn_harness::{ExperimentConfig, HarnessError};
use log::info;

#[derive(Parser)]
#[command(name = "fwrnn", version, about = "Frank-Wolfe RNN optimizer benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Replaces the config's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; replaces the config's `output`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Directory holding `mnist/` and `UCI HAR Dataset/`.
    #[arg(long, env = "FWRNN_DATASET_ROOT")]
    dataset_root: Option<PathBuf>,
    /// Dotted-key override, e.g. `train.fw.inner_steps=5`; repeatable.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl Common {
    fn load(&self) -> Result<ExperimentConfig, HarnessError> {
        let text = fs::read_to_string(&self.config)
            .map_err(|e| HarnessError::Config(vec![format!("{}: {e}", self.config.display())]))?;
        let mut table = self.table(&text)?;
        if let Some(s) = self.seed {
            if s > i64::MAX as u64 {
                return Err(HarnessError::Config(vec![format!("seed: {s} exceeds {}", i64::MAX)]));
            }
            table.insert("seed".into(), toml::Value::Integer(s as i64));
        }
        from_table(table)
    }

    fn table(&self, text: &str) -> Result<toml::Table, HarnessError> {
        let mut table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| HarnessError::Config(vec![e.message().to_string()]))?;
        for o in &self.overrides {
            apply_override(&mut table, o)?;
        }
        Ok(table)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment: metrics.csv, config.resolved, checkpoint.bin, curves.svg.
    Train(Common),
    /// Run every cell of a grid over the config and write summary.csv.
    Grid {
        #[command(flatten)]
        common: Common,
        /// Grid file with an `[axes]` table.
        #[arg(long)]
        grid: PathBuf,
        /// Concurrent cells.
        #[arg(long, default_value_t = 1)]
        threads: usize,
    },
    /// Render metrics files into one SVG.
    Plot {
        /// metrics.csv files.
        #[arg(required = true)]
        metrics: Vec<PathBuf>,
        /// Legend labels, in the order of the files (default: parent directory names).
        #[arg(long = "label")]
        labels: Vec<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Angle statistics of a run, and optionally curvature and lambda around its checkpoint.
    Diag {
        #[command(flatten)]
        common: Common,
        /// Run directory (default: the config's output).
        #[arg(long)]
        run: Option<PathBuf>,
        /// Also estimate curvature and lambda around the run's checkpoint.
        #[arg(long)]
        local: bool,
        /// Ball radius for the local probe (default: fw.delta0).
        #[arg(long)]
        radius: Option<f64>,
        #[arg(long, default_value_t = 200)]
        samples: usize,
        #[arg(long, default_value_t = 256)]
        subsample: usize,
    },
    /// Write the adding-task cache files a config would use.
    GenData(Common),
    /// Evaluate a checkpoint on the config's test (and validation) data.
    Eval {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        checkpoint: PathBuf,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cmd: Command) -> Result<u8, HarnessError> {
    match cmd {
        Command::Train(c) => {
            let cfg = c.load()?;
            let run = run_experiment(&cfg, c.out.as_deref(), c.dataset_root.as_deref())?;
            info!("wrote {}", run.out.display());
            Ok(0)
        }
        Command::Grid { common, grid, threads } => {
            let text = fs::read_to_string(&common.config)
                .map_err(|e| HarnessError::Config(vec![format!("{}: {e}", common.config.display())]))?;
            let mut table = common.table(&text)?;
            if let Some(s) = common.seed {
                table.insert("seed".into(), toml::Value::Integer(s as i64));
            }
            let cfg = from_table(table.clone())?;
            let out = output_dir(&cfg, common.out.as_deref())?;
            let spec_text = fs::read_to_string(&grid)
                .map_err(|e| HarnessError::Config(vec![format!("{}: {e}", grid.display())]))?;
            let summary = run_grid(&table, &parse_grid(&spec_text)?, &out, common.dataset_root.as_deref(), threads)?;
            print!("{}", summary.csv);
            Ok(summary.exit_code() as u8)
        }
        Command::Plot { metrics, labels, out } => {
            if !labels.is_empty() && labels.len() != metrics.len() {
                return Err(HarnessError::Config(vec![format!(
                    "--label given {} times for {} files",
                    labels.len(),
                    metrics.len()
                )]));
            }
            let series = metrics
                .iter()
                .enumerate()
                .map(|(i, p)| {
                    let label = labels.get(i).cloned().unwrap_or_else(|| default_label(p));
                    Series::from_metrics_file(&label, p)
                })
                .collect::<Result<Vec<_>, _>>()?;
            fs::write(&out, render_svg(&series))?;
            Ok(0)
        }
        Command::Diag { common, run, local, radius, samples, subsample } => {
            let cfg = common.load()?;
            let dir = match run {
                Some(r) => r,
                None => output_dir(&cfg, common.out.as_deref())?,
            };
            let angles = angle_summary(&dir.join(fwrnn_harness::runner::METRICS_FILE))?;
            let probe = if local {
                let ds = cfg.data.load(common.dataset_root.as_deref())?;
                let model = cfg.model.resolve(&ds);
                let params = load_checkpoint(&dir.join(CHECKPOINT_FILE))?;
                let r = radius.unwrap_or(cfg.train.fw.delta0);
                Some(local_probe(&model, &params, &ds, &cfg.train.fw, r, samples, subsample, cfg.seed)?)
            } else {
                None
            };
            print!("{}", format_report(Some(&angles), probe.as_ref()));
            Ok(0)
        }
        Command::GenData(c) => {
            let cfg = c.load()?;
            if cfg.data.name != DatasetName::Adding {
                return Err(HarnessError::Config(vec![format!(
                    "data.name: only the adding task is generated, got {}",
                    cfg.data.name.as_str()
                )]));
            }
            let dir = match (&c.out, &c.dataset_root) {
                (Some(o), _) => o.clone(),
                (None, Some(r)) => r.join("adding"),
                (None, None) => return Err(HarnessError::Config(vec!["gen-data needs --out or --dataset-root".into()])),
            };
            let a = &cfg.data.adding;
            for (i, n) in [(0, a.train_size), (1, a.test_size)] {
                let seed = derive_seed(cfg.data.seed, i);
                load_or_generate_adding(Some(&dir), n, a.steps, seed, a.label)?;
                println!("{}", adding_cache_path(&dir, n, a.steps, seed, a.label).display());
            }
            Ok(0)
        }
        Command::Eval { common, checkpoint } => {
            let cfg = common.load()?;
            let ds = cfg.data.load(common.dataset_root.as_deref())?;
            let model = cfg.model.resolve(&ds);
            let params = load_checkpoint(&checkpoint)?;
            if !params.same_layout(&model.zero_params()?) {
                return Err(HarnessError::Input(format!(
                    "{}: parameter layout does not match the configured model",
                    checkpoint.display()
                )));
            }
            let chunk = cfg.train.eval_chunk;
            let mut parts = vec![("test", &ds.test)];
            if let Some(v) = &ds.validation {
                parts.push(("val", v));
            }
            for (name, batch) in parts {
                let m = model.evaluate(&params, batch, chunk)?;
                println!("{name}_loss = {:?}", m.loss);
                if let Some(a) = m.accuracy {
                    println!("{name}_accuracy = {a:?}");
                }
            }
            Ok(0)
        }
    }
}

fn default_label(p: &Path) -> String {
    p.parent()
        .and_then(|d| d.file_name())
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| p.display().to_string())
}

fn load_checkpoint(path: &Path) -> Result<fwrnn_core::models::ParamSet, HarnessError> {
    let f = File::open(path).map_err(|e| HarnessError::Input(format!("{}: {e}", path.display())))?;
    read_checkpoint(BufReader::new(f)).map_err(|e| HarnessError::Input(format!("{}: {e}", path.display())))
}
