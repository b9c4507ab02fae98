//! Benchmark datasets: the adding task, pixel/permuted MNIST and HAR-2.

mod adding;
mod har;
mod mnist;
mod noise;

use std::path::Path;

use serde::{Deserialize, Serialize};

pub use adding::{
    adding_cache_path, gen_adding_task, load_or_generate_adding, read_adding_cache,
    write_adding_cache, AddingLabel,
};
pub use har::{load_har2, load_har2_with, HarOptions, HAR_CHANNELS, HAR_STEPS};
pub use mnist::{load_mnist_pixel, read_idx_images, read_idx_labels, IdxImages, MnistOptions};
pub use noise::add_gaussian_noise;

use crate::models::{SequenceBatch, Targets};
use crate::numerics::Rng;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DatasetName {
    Adding,
    PixelMnist,
    PermuteMnist,
    Har2,
    NoisyHar2,
}

impl DatasetName {
    pub fn as_str(self) -> &'static str {
        match self {
            DatasetName::Adding => "adding",
            DatasetName::PixelMnist => "pixel-mnist",
            DatasetName::PermuteMnist => "permute-mnist",
            DatasetName::Har2 => "har2",
            DatasetName::NoisyHar2 => "noisy-har2",
        }
    }

    /// Directory under the dataset root holding the raw files.
    pub fn subdir(self) -> Option<&'static str> {
        match self {
            DatasetName::Adding => None,
            DatasetName::PixelMnist | DatasetName::PermuteMnist => Some("mnist"),
            DatasetName::Har2 | DatasetName::NoisyHar2 => Some("UCI HAR Dataset"),
        }
    }

    /// (train, test, steps, features) of the full published dataset.
    pub fn reference_shape(self) -> Option<(usize, usize, usize, usize)> {
        match self {
            DatasetName::Adding => None,
            DatasetName::PixelMnist | DatasetName::PermuteMnist => Some((60000, 10000, 784, 1)),
            DatasetName::Har2 | DatasetName::NoisyHar2 => Some((7352, 2947, 128, 9)),
        }
    }
}

/// Affine input standardization fitted on training data: one entry per
/// channel, or a single entry applied to every channel.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Normalization {
    /// Fits on `inputs` laid out with `channels` interleaved features.
    /// `per_channel = false` pools every value.
    pub fn fit(inputs: &[f64], channels: usize, per_channel: bool) -> Result<Normalization> {
        let groups = if per_channel { channels } else { 1 };
        let mut mean = vec![0.0; groups];
        let mut count = vec![0usize; groups];
        for (i, v) in inputs.iter().enumerate() {
            let g = if per_channel { i % channels } else { 0 };
            mean[g] += v;
            count[g] += 1;
        }
        for (m, &c) in mean.iter_mut().zip(&count) {
            if c == 0 {
                return Err(Error::InvalidArgument("normalization of empty data".into()));
            }
            *m /= c as f64;
        }
        let mut var = vec![0.0; groups];
        for (i, v) in inputs.iter().enumerate() {
            let g = if per_channel { i % channels } else { 0 };
            var[g] += (v - mean[g]).powi(2);
        }
        let std = var
            .iter()
            .zip(&count)
            .map(|(s, &c)| {
                let sd = (s / c as f64).sqrt();
                // a constant channel is only centered
                if sd > 0.0 { sd } else { 1.0 }
            })
            .collect();
        Ok(Normalization { mean, std })
    }

    pub fn apply(&self, inputs: &mut [f64], channels: usize) {
        let per_channel = self.mean.len() > 1;
        for (i, v) in inputs.iter_mut().enumerate() {
            let g = if per_channel { i % channels } else { 0 };
            *v = (*v - self.mean[g]) / self.std[g];
        }
    }
}

/// What was loaded, for the run's audit trail.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetSpec {
    pub name: DatasetName,
    pub train_size: usize,
    pub validation_size: usize,
    pub test_size: usize,
    pub steps: usize,
    pub input_dim: usize,
    pub seed: u64,
    pub normalization: Option<Normalization>,
    /// Free-form provenance, e.g. label mapping or permutation seed.
    pub notes: Vec<String>,
}

#[derive(Clone, Debug)]
pub struct Dataset {
    pub spec: DatasetSpec,
    pub train: SequenceBatch,
    pub validation: Option<SequenceBatch>,
    pub test: SequenceBatch,
}

impl Dataset {
    /// Number of output classes, or `None` for regression.
    pub fn classes(&self) -> Option<usize> {
        match self.train.targets() {
            Targets::Classes(c) => Some(c.iter().max().map_or(0, |m| m + 1).max(2)),
            Targets::Values(_) => None,
        }
    }

    /// Moves a seeded random `fraction` of the training set into a validation split.
    pub fn with_validation(mut self, fraction: f64, seed: u64) -> Result<Dataset> {
        if !(0.0..1.0).contains(&fraction) {
            return Err(Error::InvalidArgument(format!(
                "validation fraction {fraction} outside [0, 1)"
            )));
        }
        let n = self.train.len();
        let n_val = (fraction * n as f64).round() as usize;
        if n_val == 0 {
            return Ok(self);
        }
        let perm = Rng::new(seed).permutation(n);
        let (val_idx, train_idx) = perm.split_at(n_val);
        let mut train_idx = train_idx.to_vec();
        let mut val_idx = val_idx.to_vec();
        train_idx.sort_unstable();
        val_idx.sort_unstable();
        self.validation = Some(self.train.select(&val_idx));
        self.train = self.train.select(&train_idx);
        self.spec.train_size = self.train.len();
        self.spec.validation_size = n_val;
        self.spec.notes.push(format!("validation: {n_val} held out with seed {seed}"));
        Ok(self)
    }
}

/// Everything needed to materialize a dataset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataConfig {
    pub name: DatasetName,
    /// Seed for generation, permutation, noise and the validation split.
    pub seed: u64,
    pub validation_fraction: f64,
    pub adding: AddingConfig,
    pub mnist: MnistOptions,
    pub har: HarOptions,
    /// Gaussian input noise variance for `noisy-har2`.
    pub noise_variance: f64,
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig {
            name: DatasetName::Adding,
            seed: 0,
            validation_fraction: 0.0,
            adding: AddingConfig::default(),
            mnist: MnistOptions::default(),
            har: HarOptions::default(),
            noise_variance: 2.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AddingConfig {
    pub train_size: usize,
    pub test_size: usize,
    pub steps: usize,
    pub label: AddingLabel,
    /// Cache generated sets under `<dataset root>/adding` when a root is given.
    pub cache: bool,
}

impl Default for AddingConfig {
    fn default() -> Self {
        AddingConfig {
            train_size: 10000,
            test_size: 1000,
            steps: 100,
            label: AddingLabel::Marked,
            cache: false,
        }
    }
}

impl DataConfig {
    /// Field-qualified descriptions of every invalid setting.
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !(0.0..1.0).contains(&self.validation_fraction) {
            out.push(format!("data.validation_fraction: {} not in [0, 1)", self.validation_fraction));
        }
        if !(self.noise_variance >= 0.0 && self.noise_variance.is_finite()) {
            out.push(format!("data.noise_variance: {} must be >= 0", self.noise_variance));
        }
        if self.name == DatasetName::Adding {
            let a = &self.adding;
            if a.steps < 2 {
                out.push(format!("data.adding.steps: {} < 2", a.steps));
            }
            if a.train_size == 0 {
                out.push("data.adding.train_size: must be positive".into());
            }
            if a.test_size == 0 {
                out.push("data.adding.test_size: must be positive".into());
            }
        }
        if matches!(self.name, DatasetName::PixelMnist | DatasetName::PermuteMnist)
            && !matches!(self.mnist.downsample, 1 | 2 | 4 | 7 | 14 | 28)
        {
            out.push(format!("data.mnist.downsample: {} does not divide 28", self.mnist.downsample));
        }
        out
    }

    /// Loads or generates the dataset; raw files are looked up under `root`.
    pub fn load(&self, root: Option<&Path>) -> Result<Dataset> {
        let problems = self.problems();
        if !problems.is_empty() {
            return Err(Error::InvalidArgument(problems.join("; ")));
        }
        let seed = self.seed;
        let need_root = || {
            root.map(|r| r.join(self.name.subdir().unwrap_or("")))
                .ok_or_else(|| Error::MissingFile(self.name.subdir().unwrap_or("").into()))
        };
        let ds = match self.name {
            DatasetName::Adding => {
                let a = &self.adding;
                let cache = if a.cache { root.map(|r| r.join("adding")) } else { None };
                let train = load_or_generate_adding(
                    cache.as_deref(), a.train_size, a.steps, crate::numerics::derive_seed(seed, 0), a.label,
                )?;
                let test = load_or_generate_adding(
                    cache.as_deref(), a.test_size, a.steps, crate::numerics::derive_seed(seed, 1), a.label,
                )?;
                Dataset {
                    spec: DatasetSpec {
                        name: self.name,
                        train_size: train.len(),
                        validation_size: 0,
                        test_size: test.len(),
                        steps: a.steps,
                        input_dim: 2,
                        seed,
                        normalization: None,
                        notes: vec![format!("label: {}", a.label.as_str())],
                    },
                    train,
                    validation: None,
                    test,
                }
            }
            DatasetName::PixelMnist | DatasetName::PermuteMnist => {
                let mut opts = self.mnist.clone();
                if self.name == DatasetName::PermuteMnist {
                    opts.permute.get_or_insert(seed);
                } else {
                    opts.permute = None;
                }
                let mut ds = load_mnist_pixel(&need_root()?, &opts)?;
                ds.spec.name = self.name;
                ds.spec.seed = seed;
                ds
            }
            DatasetName::Har2 | DatasetName::NoisyHar2 => {
                let mut ds = load_har2_with(&need_root()?, &self.har)?;
                ds.spec.seed = seed;
                if self.name == DatasetName::NoisyHar2 {
                    let mut rng = Rng::new(crate::numerics::derive_seed(seed, 2));
                    ds.train = add_gaussian_noise(&ds.train, self.noise_variance, &mut rng)?;
                    ds.test = add_gaussian_noise(&ds.test, self.noise_variance, &mut rng)?;
                    ds.spec.name = DatasetName::NoisyHar2;
                    ds.spec
                        .notes
                        .push(format!("gaussian noise variance {} (train then test)", self.noise_variance));
                }
                ds
            }
        };
        ds.with_validation(self.validation_fraction, crate::numerics::derive_seed(seed, 3))
    }
}

pub(crate) fn corrupt(path: &Path, reason: impl Into<String>) -> Error {
    Error::Corrupt {
        path: path.to_path_buf(),
        reason: reason.into(),
    }
}

pub(crate) fn open(path: &Path) -> Result<std::fs::File> {
    std::fs::File::open(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::MissingFile(path.to_path_buf()),
        _ => Error::Io(e),
    })
}
