//! Linear minimization oracle over `l_p` balls.
//!
//! For `C = { s : ||s||_p <= delta }` the minimizer of `<s, g>` is where
//! Hölder's inequality is tight:
//!
//! ```text
//! s_i = -alpha * sgn(g_i) * |g_i|^(q/p),   1/p + 1/q = 1,   ||s||_p = delta
//! ```
//!
//! with attained value `-delta * ||g||_q`. `p = 2` gives the `delta`-scaled
//! normalized gradient and `p = inf` the `delta`-scaled sign vector. `p = 1`
//! picks a single signed vertex of the cross-polytope.

use crate::numerics::{dot, l2_norm, max_abs, norm, PNorm};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct LmoResult {
    /// The minimizer `s`.
    pub direction: Vec<f64>,
    /// `<s, g>`.
    pub attained_value: f64,
}

impl LmoResult {
    fn zero(dim: usize) -> Self {
        LmoResult {
            direction: vec![0.0; dim],
            attained_value: 0.0,
        }
    }
}

/// `sgn` with `sgn(0) = 0`.
fn sgn(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn check(g: &[f64], delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "ball radius must be positive and finite, got {delta}"
        )));
    }
    if g.iter().any(|v| !v.is_finite()) {
        return Err(Error::non_finite("LMO gradient"));
    }
    Ok(())
}

/// `argmin_{||s||_p <= delta} <s, g>` for any `p >= 1`.
///
/// A zero gradient returns the zero vector so a Frank-Wolfe step at a
/// stationary point does nothing.
pub fn lmo_lp_ball(g: &[f64], p: PNorm, delta: f64) -> Result<LmoResult> {
    check(g, delta)?;
    let pv = p.value();
    if pv == 1.0 {
        return lmo_l1_ball(g, delta);
    }
    let gmax = max_abs(g);
    if gmax == 0.0 {
        return Ok(LmoResult::zero(g.len()));
    }

    let direction: Vec<f64> = if pv == 2.0 {
        let n = l2_norm(g);
        g.iter().map(|&gi| -(delta * gi / n)).collect()
    } else if p.is_infinite() {
        g.iter().map(|&gi| -delta * sgn(gi)).collect()
    } else {
        // q/p = 1/(p-1); magnitudes are taken relative to max|g| so extreme
        // exponents (p near 1 or very large) stay representable
        let expo = 1.0 / (pv - 1.0);
        let mags: Vec<f64> = g.iter().map(|&gi| (gi.abs() / gmax).powf(expo)).collect();
        let alpha = delta / norm(&mags, p);
        g.iter()
            .zip(&mags)
            .map(|(&gi, &m)| -alpha * sgn(gi) * m)
            .collect()
    };
    let attained_value = dot(&direction, g);
    Ok(LmoResult {
        direction,
        attained_value,
    })
}

/// `p = 1` case: the signed vertex `-delta * sgn(g_i*) e_i*` with `i* = argmax |g_i|`,
/// lowest index on ties.
pub fn lmo_l1_ball(g: &[f64], delta: f64) -> Result<LmoResult> {
    check(g, delta)?;
    let mut best: Option<(usize, f64)> = None;
    for (i, &gi) in g.iter().enumerate() {
        if gi != 0.0 && best.is_none_or(|(_, b)| gi.abs() > b) {
            best = Some((i, gi.abs()));
        }
    }
    let Some((i, _)) = best else {
        return Ok(LmoResult::zero(g.len()));
    };
    let mut direction = vec![0.0; g.len()];
    direction[i] = -delta * sgn(g[i]);
    Ok(LmoResult {
        attained_value: direction[i] * g[i],
        direction,
    })
}
