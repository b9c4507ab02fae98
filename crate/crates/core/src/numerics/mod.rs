//! Dense linear algebra, `l_p` norms and the seeded generator.
//!
//! Everything is `f64`. Matrices are row-major so a flattened parameter set
//! has one unambiguous ordering.

mod matrix;
mod norm;
mod rng;

pub use matrix::{gemm, matmul, MatRef, Matrix};
pub use norm::{dot, l2_norm, lp_norm, max_abs, norm, PNorm};
pub use rng::{derive_seed, splitmix64, Rng};

/// Flat vectors are plain `Vec<f64>`.
pub type Vector = Vec<f64>;

/// `y += a * x`
pub fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

pub fn all_finite(v: &[f64]) -> bool {
    v.iter().all(|x| x.is_finite())
}
