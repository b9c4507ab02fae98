use std::fmt;

use crate::numerics::Matrix;
use crate::{Error, Result};

/// Which half of the weights a tensor belongs to: the state transition
/// (input, recurrent, bias) or the readout on the final state.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ParamGroup {
    Transition,
    Readout,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParamEntry {
    pub name: String,
    pub group: ParamGroup,
    pub rows: usize,
    pub cols: usize,
    pub offset: usize,
}

impl ParamEntry {
    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.len()
    }
}

/// Named weight matrices stored back to back in one flat buffer.
///
/// The flat view is the insertion order of the entries, each entry row-major.
/// Models insert per layer `W` (hidden x input), then the recurrent weight
/// (`U`, hidden x hidden, or `u`, 1 x hidden), then `b` (1 x hidden); then the
/// readout `V` (output x hidden) and `c` (1 x output).
#[derive(Clone, PartialEq)]
pub struct ParamSet {
    entries: Vec<ParamEntry>,
    data: Vec<f64>,
}

impl ParamSet {
    pub fn new() -> Self {
        ParamSet {
            entries: Vec::new(),
            data: Vec::new(),
        }
    }

    pub fn push(&mut self, name: impl Into<String>, group: ParamGroup, m: Matrix) -> Result<()> {
        let name = name.into();
        if self.index_of(&name).is_some() {
            return Err(Error::InvalidArgument(format!("duplicate parameter {name}")));
        }
        let (rows, cols) = m.shape();
        self.entries.push(ParamEntry {
            name,
            group,
            rows,
            cols,
            offset: self.data.len(),
        });
        self.data.extend_from_slice(m.as_slice());
        Ok(())
    }

    pub fn entries(&self) -> &[ParamEntry] {
        &self.entries
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.entries.iter().position(|e| e.name == name)
    }

    /// Owned copy of one tensor.
    pub fn get(&self, name: &str) -> Option<Matrix> {
        let e = &self.entries[self.index_of(name)?];
        Some(Matrix::from_raw(e.rows, e.cols, self.data[e.range()].to_vec()))
    }

    pub fn view(&self, name: &str) -> Option<&[f64]> {
        self.index_of(name).map(|i| self.slot(i))
    }

    pub fn view_mut(&mut self, name: &str) -> Option<&mut [f64]> {
        self.index_of(name).map(|i| self.slot_mut(i))
    }

    pub(crate) fn slot(&self, i: usize) -> &[f64] {
        &self.data[self.entries[i].range()]
    }

    pub(crate) fn slot_mut(&mut self, i: usize) -> &mut [f64] {
        let r = self.entries[i].range();
        &mut self.data[r]
    }

    /// Total number of scalars.
    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn flat(&self) -> &[f64] {
        &self.data
    }

    pub fn flat_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn flatten(&self) -> Vec<f64> {
        self.data.clone()
    }

    /// A set with this layout holding `flat`.
    pub fn unflatten(&self, flat: &[f64]) -> Result<ParamSet> {
        if flat.len() != self.data.len() {
            return Err(Error::shape("ParamSet::unflatten", self.data.len(), flat.len()));
        }
        Ok(ParamSet {
            entries: self.entries.clone(),
            data: flat.to_vec(),
        })
    }

    /// Overwrites all values from `flat`, keeping the layout.
    pub fn assign_flat(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.data.len() {
            return Err(Error::shape("ParamSet::assign_flat", self.data.len(), flat.len()));
        }
        self.data.copy_from_slice(flat);
        Ok(())
    }

    pub fn zeros_like(&self) -> ParamSet {
        ParamSet {
            entries: self.entries.clone(),
            data: vec![0.0; self.data.len()],
        }
    }

    pub fn same_layout(&self, other: &ParamSet) -> bool {
        self.entries == other.entries
    }

    /// Number of scalars in one group.
    pub fn group_len(&self, group: ParamGroup) -> usize {
        self.entries
            .iter()
            .filter(|e| e.group == group)
            .map(ParamEntry::len)
            .sum()
    }

    pub(crate) fn from_parts(entries: Vec<ParamEntry>, data: Vec<f64>) -> Result<ParamSet> {
        let mut offset = 0;
        for e in &entries {
            if e.offset != offset {
                return Err(Error::Checkpoint(format!("entry {} out of order", e.name)));
            }
            offset += e.len();
        }
        if offset != data.len() {
            return Err(Error::shape("ParamSet::from_parts", offset, data.len()));
        }
        Ok(ParamSet { entries, data })
    }
}

impl Default for ParamSet {
    fn default() -> Self {
        ParamSet::new()
    }
}

impl fmt::Debug for ParamSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut d = f.debug_map();
        for e in &self.entries {
            d.entry(&e.name, &format_args!("{}x{}", e.rows, e.cols));
        }
        d.finish()
    }
}
