//! Dense complex linear algebra used throughout the crate.

mod linalg;
mod matrix;

pub use linalg::{
    complete_onb, gram_violation, herm_eigen, inner, norm, phase_normalize, pinv, psd_inv_sqrt, psd_rank,
    psd_sqrt, random_unitary, scale_vec, unit_vector, HermEigen,
};
pub use matrix::{apply_on_factor, kron, kron_vec, partial_trace, ComplexMatrix, MAX_ENTRIES};
pub use num_complex::Complex64;

use serde::{Deserialize, Serialize};

/// Numerical thresholds shared by the validity checks.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Validity checks on user-facing objects (POVM completeness, PSD, covariance).
    pub validity: f64,
    /// Internal algebraic identities.
    pub internal: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            validity: 1e-9,
            internal: 1e-12,
        }
    }
}

pub fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn real_vector(xs: &[f64]) -> Vec<Complex64> {
    xs.iter().map(|&x| Complex64::new(x, 0.0)).collect()
}
