use std::fmt;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Exponent `p` of an `l_p` norm, `1 <= p <= inf`.
///
/// Serializes as a plain float; TOML spells infinity as `inf`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct PNorm(f64);

impl PNorm {
    pub const ONE: PNorm = PNorm(1.0);
    pub const TWO: PNorm = PNorm(2.0);
    pub const INFINITY: PNorm = PNorm(f64::INFINITY);

    pub fn new(p: f64) -> Result<Self> {
        if p.is_nan() || p < 1.0 {
            return Err(Error::InvalidNorm(p));
        }
        Ok(PNorm(p))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_infinite(self) -> bool {
        self.0.is_infinite()
    }

    /// Hölder conjugate `q` with `1/p + 1/q = 1`.
    pub fn dual(self) -> PNorm {
        if self.0 == 1.0 {
            PNorm::INFINITY
        } else if self.0.is_infinite() {
            PNorm::ONE
        } else {
            PNorm(self.0 / (self.0 - 1.0))
        }
    }
}

impl TryFrom<f64> for PNorm {
    type Error = Error;

    fn try_from(p: f64) -> Result<Self> {
        PNorm::new(p)
    }
}

impl From<PNorm> for f64 {
    fn from(p: PNorm) -> f64 {
        p.0
    }
}

impl fmt::Display for PNorm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_infinite() {
            f.write_str("inf")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

/// `(sum |v_i|^p)^(1/p)`, or `max |v_i|` for `p = inf`. Zero for an empty slice.
pub fn lp_norm(v: &[f64], p: f64) -> Result<f64> {
    Ok(norm(v, PNorm::new(p)?))
}

/// Infallible form of [`lp_norm`] for an already validated exponent.
pub fn norm(v: &[f64], p: PNorm) -> f64 {
    let p = p.value();
    if p == 2.0 {
        return l2_norm(v);
    }
    if p == 1.0 {
        return v.iter().map(|x| x.abs()).sum();
    }
    let max = max_abs(v);
    if p.is_infinite() || max == 0.0 {
        return max;
    }
    // scale by the largest magnitude so large p neither overflows nor underflows
    let s: f64 = v.iter().map(|x| (x.abs() / max).powf(p)).sum();
    max * s.powf(1.0 / p)
}

pub fn l2_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
