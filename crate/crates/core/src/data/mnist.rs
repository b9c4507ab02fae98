use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{corrupt, open, Dataset, DatasetName, DatasetSpec, Normalization};
use crate::models::{SequenceBatch, Targets};
use crate::numerics::Rng;
use crate::{Error, Result};

const IMAGE_MAGIC: u32 = 0x0000_0803;
const LABEL_MAGIC: u32 = 0x0000_0801;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MnistOptions {
    /// Seed of the fixed pixel permutation; `None` keeps row-major order.
    pub permute: Option<u64>,
    /// Average-pool factor per side (1 keeps 28x28, 2 gives 14x14).
    pub downsample: usize,
    /// Use only the first this-many training / test images.
    pub train_limit: Option<usize>,
    pub test_limit: Option<usize>,
    /// Require the raw files to hold exactly 60000 / 10000 28x28 images.
    pub check_shape: bool,
}

impl Default for MnistOptions {
    fn default() -> Self {
        MnistOptions {
            permute: None,
            downsample: 1,
            train_limit: None,
            test_limit: None,
            check_shape: true,
        }
    }
}

#[derive(Clone, Debug)]
pub struct IdxImages {
    pub count: usize,
    pub rows: usize,
    pub cols: usize,
    pub pixels: Vec<u8>,
}

fn read_all(path: &Path) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    open(path)?.read_to_end(&mut buf)?;
    Ok(buf)
}

fn be_u32(buf: &[u8], at: usize, path: &Path) -> Result<u32> {
    buf.get(at..at + 4)
        .map(|b| u32::from_be_bytes(b.try_into().expect("4 bytes")))
        .ok_or_else(|| corrupt(path, "truncated header"))
}

pub fn read_idx_images(path: &Path) -> Result<IdxImages> {
    let buf = read_all(path)?;
    let magic = be_u32(&buf, 0, path)?;
    if magic != IMAGE_MAGIC {
        return Err(corrupt(path, format!("magic {magic:#010x}, expected {IMAGE_MAGIC:#010x}")));
    }
    let count = be_u32(&buf, 4, path)? as usize;
    let rows = be_u32(&buf, 8, path)? as usize;
    let cols = be_u32(&buf, 12, path)? as usize;
    let want = count * rows * cols;
    if buf.len() - 16 != want {
        return Err(corrupt(path, format!("{} pixel bytes, header implies {want}", buf.len() - 16)));
    }
    Ok(IdxImages {
        count,
        rows,
        cols,
        pixels: buf[16..].to_vec(),
    })
}

pub fn read_idx_labels(path: &Path) -> Result<Vec<u8>> {
    let buf = read_all(path)?;
    let magic = be_u32(&buf, 0, path)?;
    if magic != LABEL_MAGIC {
        return Err(corrupt(path, format!("magic {magic:#010x}, expected {LABEL_MAGIC:#010x}")));
    }
    let count = be_u32(&buf, 4, path)? as usize;
    if buf.len() - 8 != count {
        return Err(corrupt(path, format!("{} label bytes, header implies {count}", buf.len() - 8)));
    }
    if let Some(bad) = buf[8..].iter().find(|&&l| l > 9) {
        return Err(corrupt(path, format!("label {bad} outside 0..=9")));
    }
    Ok(buf[8..].to_vec())
}

fn split(
    dir: &Path,
    prefix: &str,
    limit: Option<usize>,
    opts: &MnistOptions,
    expected: usize,
) -> Result<(Vec<f64>, Vec<usize>, usize)> {
    let img_path = dir.join(format!("{prefix}-images-idx3-ubyte"));
    let lbl_path = dir.join(format!("{prefix}-labels-idx1-ubyte"));
    let images = read_idx_images(&img_path)?;
    let labels = read_idx_labels(&lbl_path)?;
    if labels.len() != images.count {
        return Err(corrupt(&lbl_path, format!("{} labels for {} images", labels.len(), images.count)));
    }
    if opts.check_shape && (images.count, images.rows, images.cols) != (expected, 28, 28) {
        return Err(corrupt(
            &img_path,
            format!("{}x{}x{} images, expected {expected}x28x28", images.count, images.rows, images.cols),
        ));
    }
    let f = opts.downsample;
    if f == 0 || images.rows % f != 0 || images.cols % f != 0 {
        return Err(Error::InvalidArgument(format!(
            "downsample {f} does not divide {}x{}",
            images.rows, images.cols
        )));
    }
    let n = limit.map_or(images.count, |l| l.min(images.count));
    let (r, c) = (images.rows / f, images.cols / f);
    let per = images.rows * images.cols;
    let scale = 1.0 / (255.0 * (f * f) as f64);
    let mut x = Vec::with_capacity(n * r * c);
    for s in 0..n {
        let img = &images.pixels[s * per..(s + 1) * per];
        for i in 0..r {
            for j in 0..c {
                let mut acc = 0u32;
                for di in 0..f {
                    for dj in 0..f {
                        acc += u32::from(img[(i * f + di) * images.cols + j * f + dj]);
                    }
                }
                x.push(f64::from(acc) * scale);
            }
        }
    }
    let y = labels[..n].iter().map(|&l| usize::from(l)).collect();
    Ok((x, y, r * c))
}

fn permute(x: &mut [f64], steps: usize, perm: &[usize]) {
    let mut tmp = vec![0.0; steps];
    for row in x.chunks_exact_mut(steps) {
        for (t, &src) in perm.iter().enumerate() {
            tmp[t] = row[src];
        }
        row.copy_from_slice(&tmp);
    }
}

/// Pixel-by-pixel MNIST from the four standard IDX files in `dir`: one
/// pixel per step, optionally pooled and permuted, standardized with the
/// global mean and deviation of the training pixels.
pub fn load_mnist_pixel(dir: &Path, opts: &MnistOptions) -> Result<Dataset> {
    let (mut train_x, train_y, steps) = split(dir, "train", opts.train_limit, opts, 60000)?;
    let (mut test_x, test_y, _) = split(dir, "t10k", opts.test_limit, opts, 10000)?;
    let mut notes = vec![format!("downsample {}: {} steps", opts.downsample, steps)];
    // fit before permuting so both orderings share bit-identical statistics
    let norm = Normalization::fit(&train_x, 1, false)?;
    norm.apply(&mut train_x, 1);
    norm.apply(&mut test_x, 1);
    if let Some(seed) = opts.permute {
        let perm = Rng::new(seed).permutation(steps);
        permute(&mut train_x, steps, &perm);
        permute(&mut test_x, steps, &perm);
        notes.push(format!("pixel permutation seed {seed}"));
    }
    let (n_train, n_test) = (train_y.len(), test_y.len());
    let train = SequenceBatch::new(train_x, n_train, steps, 1, Targets::Classes(train_y))?;
    let test = SequenceBatch::new(test_x, n_test, steps, 1, Targets::Classes(test_y))?;
    Ok(Dataset {
        spec: DatasetSpec {
            name: if opts.permute.is_some() { DatasetName::PermuteMnist } else { DatasetName::PixelMnist },
            train_size: n_train,
            validation_size: 0,
            test_size: n_test,
            steps,
            input_dim: 1,
            seed: opts.permute.unwrap_or(0),
            normalization: Some(norm),
            notes,
        },
        train,
        validation: None,
        test,
    })
}
