use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{corrupt, open};
use crate::models::{SequenceBatch, Targets};
use crate::numerics::{Matrix, Rng};
use crate::{Error, Result};

/// How the adding-task target is formed from the value channel.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AddingLabel {
    /// x[i1] + x[i2], the two marked entries.
    Marked,
    /// Sum of x over the closed interval [i1, i2].
    Interval,
}

impl AddingLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            AddingLabel::Marked => "marked",
            AddingLabel::Interval => "interval",
        }
    }

    fn code(self) -> u8 {
        match self {
            AddingLabel::Marked => 0,
            AddingLabel::Interval => 1,
        }
    }
}

/// `n` adding-task sequences of length `steps`: channel 0 uniform on [0, 1),
/// channel 1 marks one position in each half. Targets are `n x 1` values.
pub fn gen_adding_task(n: usize, steps: usize, label: AddingLabel, rng: &mut Rng) -> Result<SequenceBatch> {
    if steps < 2 {
        return Err(Error::InvalidArgument(format!("adding task needs T >= 2, got {steps}")));
    }
    let half = steps / 2;
    let mut inputs = vec![0.0; n * steps * 2];
    let mut y = Vec::with_capacity(n);
    for s in 0..n {
        let row = &mut inputs[s * steps * 2..(s + 1) * steps * 2];
        for t in 0..steps {
            row[2 * t] = rng.uniform();
        }
        let i1 = rng.below(half as u64) as usize;
        let i2 = half + rng.below((steps - half) as u64) as usize;
        row[2 * i1 + 1] = 1.0;
        row[2 * i2 + 1] = 1.0;
        y.push(match label {
            AddingLabel::Marked => row[2 * i1] + row[2 * i2],
            AddingLabel::Interval => (i1..=i2).map(|t| row[2 * t]).sum(),
        });
    }
    SequenceBatch::new(inputs, n, steps, 2, Targets::Values(Matrix::from_vec(n, 1, y)?))
}

const CACHE_MAGIC: &[u8; 8] = b"FWADD001";

/// Cache file for one (n, T, seed, label) key inside `dir`.
pub fn adding_cache_path(dir: &Path, n: usize, steps: usize, seed: u64, label: AddingLabel) -> PathBuf {
    dir.join(format!("adding-n{n}-T{steps}-s{seed}-{}.bin", label.as_str()))
}

/// Binary cache: magic `FWADD001`, then little-endian u64 n, T, seed, a u8
/// label code, then n*T*2 input f64s and n target f64s.
pub fn write_adding_cache<W: Write>(
    batch: &SequenceBatch,
    seed: u64,
    label: AddingLabel,
    out: W,
) -> Result<()> {
    let Targets::Values(y) = batch.targets() else {
        return Err(Error::InvalidArgument("adding cache needs value targets".into()));
    };
    if batch.input_dim() != 2 || y.cols() != 1 {
        return Err(Error::shape("adding cache", "n x T x 2 / n x 1", format!("{} / {}", batch.input_dim(), y.cols())));
    }
    let mut w = BufWriter::new(out);
    w.write_all(CACHE_MAGIC)?;
    for v in [batch.len() as u64, batch.steps() as u64, seed] {
        w.write_all(&v.to_le_bytes())?;
    }
    w.write_all(&[label.code()])?;
    for v in batch.inputs().iter().chain(y.as_slice()) {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a cache file and checks it holds exactly the requested key.
pub fn read_adding_cache(path: &Path, n: usize, steps: usize, seed: u64, label: AddingLabel) -> Result<SequenceBatch> {
    let mut r = BufReader::new(open(path)?);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic).map_err(|_| corrupt(path, "truncated header"))?;
    if &magic != CACHE_MAGIC {
        return Err(corrupt(path, "bad magic"));
    }
    let mut word = [0u8; 8];
    let mut header = [0u64; 3];
    for h in &mut header {
        r.read_exact(&mut word).map_err(|_| corrupt(path, "truncated header"))?;
        *h = u64::from_le_bytes(word);
    }
    let mut code = [0u8; 1];
    r.read_exact(&mut code).map_err(|_| corrupt(path, "truncated header"))?;
    if header != [n as u64, steps as u64, seed] || code[0] != label.code() {
        return Err(corrupt(path, format!("key {header:?}/{} does not match request", code[0])));
    }
    let total = n * steps * 2 + n;
    let mut body = Vec::with_capacity(total * 8);
    r.read_to_end(&mut body)?;
    if body.len() != total * 8 {
        return Err(corrupt(path, format!("expected {} body bytes, found {}", total * 8, body.len())));
    }
    let vals: Vec<f64> = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    let (x, y) = vals.split_at(n * steps * 2);
    let y = Matrix::from_vec(n, 1, y.to_vec()).map_err(|_| corrupt(path, "non-finite target"))?;
    SequenceBatch::new(x.to_vec(), n, steps, 2, Targets::Values(y)).map_err(|_| corrupt(path, "non-finite input"))
}

/// Generates from `seed`, going through the cache in `dir` when given.
pub fn load_or_generate_adding(
    dir: Option<&Path>,
    n: usize,
    steps: usize,
    seed: u64,
    label: AddingLabel,
) -> Result<SequenceBatch> {
    let generate = || gen_adding_task(n, steps, label, &mut Rng::new(seed));
    let Some(dir) = dir else {
        return generate();
    };
    let path = adding_cache_path(dir, n, steps, seed, label);
    if path.exists() {
        return read_adding_cache(&path, n, steps, seed, label);
    }
    let batch = generate()?;
    std::fs::create_dir_all(dir)?;
    // write then rename so concurrent readers never see a partial file
    let tmp = path.with_extension(format!("tmp{}", std::process::id()));
    write_adding_cache(&batch, seed, label, std::fs::File::create(&tmp)?)?;
    std::fs::rename(&tmp, &path)?;
    Ok(batch)
}
