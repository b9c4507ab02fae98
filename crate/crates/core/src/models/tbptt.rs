use super::SequenceBatch;
use crate::{Error, Result};

/// One time window of a batch. The trainer runs it from the previous
/// segment's final hidden state, treated as a constant.
#[derive(Clone, Debug)]
pub struct Segment {
    /// First step (0-based) of the window in the full sequence.
    pub start: usize,
    pub batch: SequenceBatch,
}

/// Splits `batch` into consecutive windows of `segment_len` steps; the last
/// one may be shorter. A length beyond the sequence gives one segment.
pub fn tbptt_segments(batch: &SequenceBatch, segment_len: usize) -> Result<Vec<Segment>> {
    if segment_len == 0 {
        return Err(Error::InvalidArgument("segment length must be at least 1".into()));
    }
    let steps = batch.steps();
    let mut out = Vec::with_capacity(steps.div_ceil(segment_len));
    let mut start = 0;
    while start < steps {
        let len = segment_len.min(steps - start);
        out.push(Segment {
            start,
            batch: batch.time_slice(start, len)?,
        });
        start += len;
    }
    if out.is_empty() {
        out.push(Segment {
            start: 0,
            batch: batch.clone(),
        });
    }
    Ok(out)
}
