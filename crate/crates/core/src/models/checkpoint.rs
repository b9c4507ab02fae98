//! Parameter checkpoints.
//!
//! Binary layout, all integers and floats little-endian:
//!
//! ```text
//! magic    8 bytes  "FWRNNCKP"
//! version  u32      1
//! count    u32      number of tensors
//! count x { name_len u32, name UTF-8 bytes, group u8 (0 transition, 1 readout),
//!           rows u64, cols u64 }
//! body     f64 x total, tensors in header order, each row-major
//! ```
//!
//! The text dump has a `# fwrnn checkpoint v1` line, then per tensor a
//! `param <name> <group> <rows> <cols>` line followed by one line per row.
//! Values use Rust's shortest round-trip formatting, so the dump is lossless.

use std::io::{Read, Write};

use super::params::{ParamEntry, ParamGroup, ParamSet};
use crate::{Error, Result};

const MAGIC: &[u8; 8] = b"FWRNNCKP";
const VERSION: u32 = 1;

fn group_code(g: ParamGroup) -> u8 {
    match g {
        ParamGroup::Transition => 0,
        ParamGroup::Readout => 1,
    }
}

fn group_name(g: ParamGroup) -> &'static str {
    match g {
        ParamGroup::Transition => "transition",
        ParamGroup::Readout => "readout",
    }
}

pub fn write_checkpoint<W: Write>(params: &ParamSet, mut w: W) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(params.entries().len() as u32).to_le_bytes())?;
    for e in params.entries() {
        w.write_all(&(e.name.len() as u32).to_le_bytes())?;
        w.write_all(e.name.as_bytes())?;
        w.write_all(&[group_code(e.group)])?;
        w.write_all(&(e.rows as u64).to_le_bytes())?;
        w.write_all(&(e.cols as u64).to_le_bytes())?;
    }
    for v in params.flat() {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

fn read_array<const N: usize, R: Read>(r: &mut R) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf)
        .map_err(|e| Error::Checkpoint(format!("truncated: {e}")))?;
    Ok(buf)
}

pub fn read_checkpoint<R: Read>(mut r: R) -> Result<ParamSet> {
    if &read_array::<8, _>(&mut r)? != MAGIC {
        return Err(Error::Checkpoint("bad magic".into()));
    }
    let version = u32::from_le_bytes(read_array(&mut r)?);
    if version != VERSION {
        return Err(Error::Checkpoint(format!("unsupported version {version}")));
    }
    let count = u32::from_le_bytes(read_array(&mut r)?) as usize;
    let mut entries = Vec::with_capacity(count);
    let mut offset = 0usize;
    for _ in 0..count {
        let len = u32::from_le_bytes(read_array(&mut r)?) as usize;
        let mut name = vec![0u8; len];
        r.read_exact(&mut name)
            .map_err(|e| Error::Checkpoint(format!("truncated name: {e}")))?;
        let name =
            String::from_utf8(name).map_err(|_| Error::Checkpoint("name is not UTF-8".into()))?;
        let group = match read_array::<1, _>(&mut r)?[0] {
            0 => ParamGroup::Transition,
            1 => ParamGroup::Readout,
            g => return Err(Error::Checkpoint(format!("unknown group {g}"))),
        };
        let rows = u64::from_le_bytes(read_array(&mut r)?) as usize;
        let cols = u64::from_le_bytes(read_array(&mut r)?) as usize;
        entries.push(ParamEntry {
            name,
            group,
            rows,
            cols,
            offset,
        });
        offset += rows * cols;
    }
    let mut data = Vec::with_capacity(offset);
    for _ in 0..offset {
        data.push(f64::from_le_bytes(read_array(&mut r)?));
    }
    let mut rest = [0u8; 1];
    if r.read(&mut rest)? != 0 {
        return Err(Error::Checkpoint("trailing bytes".into()));
    }
    ParamSet::from_parts(entries, data)
}

pub fn dump_text(params: &ParamSet) -> String {
    let mut s = String::from("# fwrnn checkpoint v1\n");
    for e in params.entries() {
        s.push_str(&format!(
            "param {} {} {} {}\n",
            e.name,
            group_name(e.group),
            e.rows,
            e.cols
        ));
        let vals = params.view(&e.name).expect("entry exists");
        for row in vals.chunks(e.cols.max(1)) {
            let line: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
            s.push_str(&line.join(" "));
            s.push('\n');
        }
    }
    s
}

pub fn parse_text(text: &str) -> Result<ParamSet> {
    let bad = |msg: String| Error::Checkpoint(msg);
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    match lines.next() {
        Some(h) if h.trim() == "# fwrnn checkpoint v1" => {}
        _ => return Err(bad("missing text header".into())),
    }
    let mut entries = Vec::new();
    let mut data = Vec::new();
    while let Some(line) = lines.next() {
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 5 || f[0] != "param" {
            return Err(bad(format!("expected param line, got {line:?}")));
        }
        let group = match f[2] {
            "transition" => ParamGroup::Transition,
            "readout" => ParamGroup::Readout,
            g => return Err(bad(format!("unknown group {g}"))),
        };
        let rows: usize = f[3].parse().map_err(|_| bad(format!("bad rows in {line:?}")))?;
        let cols: usize = f[4].parse().map_err(|_| bad(format!("bad cols in {line:?}")))?;
        entries.push(ParamEntry {
            name: f[1].to_string(),
            group,
            rows,
            cols,
            offset: data.len(),
        });
        for _ in 0..rows {
            let row = lines.next().ok_or_else(|| bad(format!("{} truncated", f[1])))?;
            let vals: Vec<f64> = row
                .split_whitespace()
                .map(|t| t.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| bad(format!("bad number in {row:?}")))?;
            if vals.len() != cols {
                return Err(bad(format!("{}: row has {} values", f[1], vals.len())));
            }
            data.extend(vals);
        }
    }
    ParamSet::from_parts(entries, data)
}
