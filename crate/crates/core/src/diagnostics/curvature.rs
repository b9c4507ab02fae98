use crate::numerics::{dot, PNorm, Rng};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct CurvatureEstimate {
    /// Largest sampled value of the scaled Bregman gap; a lower bound on the
    /// curvature constant of the ball.
    pub estimate: f64,
    pub samples: usize,
    /// Samples dropped because an evaluation was not finite.
    pub skipped: usize,
    pub center: Vec<f64>,
    pub radius: f64,
    pub p: PNorm,
}

/// Smallest interpolation weight sampled. The gap divides by `gamma^2`, so
/// tiny weights would turn rounding in `f(y) - f(x)` into large spurious
/// values without ever raising the true maximum (exact for quadratics,
/// where the scaled gap does not depend on `gamma`).
const GAMMA_MIN: f64 = 1e-2;

/// A point uniformly distributed in the `l_p` ball of `radius` around `center`.
///
/// Uses the generalized-Gaussian construction: coordinates with density
/// proportional to `exp(-|t|^p)`, plus an independent exponential variable,
/// normalized by the `p`-norm of the lot.
pub fn sample_lp_ball(center: &[f64], radius: f64, p: PNorm, rng: &mut Rng) -> Vec<f64> {
    let n = center.len();
    if p.is_infinite() {
        return center
            .iter()
            .map(|c| c + radius * rng.uniform_range(-1.0, 1.0))
            .collect();
    }
    let pv = p.value();
    let mut y = Vec::with_capacity(n);
    let mut sum = 0.0;
    for _ in 0..n {
        let g = rng.gamma(1.0 / pv);
        let mag = g.powf(1.0 / pv);
        sum += g; // |y_i|^p
        y.push(if rng.below(2) == 0 { mag } else { -mag });
    }
    let z = -(1.0 - rng.uniform()).ln();
    let scale = radius / (sum + z).powf(1.0 / pv);
    center.iter().zip(y).map(|(c, v)| c + scale * v).collect()
}

/// Monte-Carlo maximum of `(2/gamma^2)(f(y) - f(x) - <grad f(x), y - x>)`
/// over `x, s` uniform in the ball and `y = (1 - gamma) x + gamma s`.
///
/// `f` returns the value and gradient. The sample stream is sequential, so a
/// run with more samples from the same generator state never reports less.
pub fn estimate_curvature<F>(
    mut f: F,
    center: &[f64],
    radius: f64,
    p: PNorm,
    samples: usize,
    rng: &mut Rng,
) -> Result<CurvatureEstimate>
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    if samples == 0 {
        return Err(Error::InvalidArgument("curvature needs at least one sample".into()));
    }
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(Error::InvalidArgument(format!("radius must be positive, got {radius}")));
    }
    let mut best = f64::NEG_INFINITY;
    let mut skipped = 0;
    let mut diff = vec![0.0; center.len()];
    for _ in 0..samples {
        let x = sample_lp_ball(center, radius, p, rng);
        let s = sample_lp_ball(center, radius, p, rng);
        let gamma = rng.uniform_range(GAMMA_MIN, 1.0);
        let y: Vec<f64> = x.iter().zip(&s).map(|(a, b)| (1.0 - gamma) * a + gamma * b).collect();
        let (fx, gx) = f(&x);
        let (fy, _) = f(&y);
        for ((d, a), b) in diff.iter_mut().zip(&y).zip(&x) {
            *d = a - b;
        }
        let q = 2.0 / (gamma * gamma) * (fy - fx - dot(&gx, &diff));
        if q.is_finite() {
            best = best.max(q);
        } else {
            skipped += 1;
        }
    }
    Ok(CurvatureEstimate {
        estimate: best,
        samples,
        skipped,
        center: center.to_vec(),
        radius,
        p,
    })
}
