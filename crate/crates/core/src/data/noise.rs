use crate::models::SequenceBatch;
use crate::numerics::Rng;
use crate::{Error, Result};

/// Copy of `batch` with i.i.d. N(0, variance) added to every input; targets untouched.
pub fn add_gaussian_noise(batch: &SequenceBatch, variance: f64, rng: &mut Rng) -> Result<SequenceBatch> {
    if !(variance >= 0.0 && variance.is_finite()) {
        return Err(Error::InvalidArgument(format!("noise variance {variance}")));
    }
    let mut out = batch.clone();
    if variance == 0.0 {
        return Ok(out);
    }
    let sd = variance.sqrt();
    for v in out.inputs_mut() {
        *v += sd * rng.normal();
    }
    Ok(out)
}
