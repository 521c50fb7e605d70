use serde::{Deserialize, Serialize};

use super::{outcome_probs, Povm};
use crate::error::{Error, Result};
use crate::numerics::{herm_eigen, pinv, psd_inv_sqrt, psd_sqrt, ComplexMatrix, Tolerances};
use crate::states::AguStateSet;

/// Residual below which a minimum-error measurement counts as certified.
pub const ME_CERTIFICATE_TOLERANCE: f64 = 1e-8;

const ITERATION_LIMIT: usize = 20_000;

/// Square-root measurement `π_{m,r} = S^{+1/2} ψ_{m,r}` with `Π_? = 0`.
///
/// When the states do not span the space the unused complement is shared
/// equally among the conclusive outcomes so the measurement stays complete
/// and covariant; the detection vectors are then omitted.
pub fn srm(set: &AguStateSet, tol: &Tolerances) -> Result<Povm> {
    let d = set.dim();
    let frame = set.frame_operator();
    let root = psd_inv_sqrt(&frame, None, tol.validity)?;
    let vectors: Vec<Vec<_>> = super::covariant_vectors(set, &root);
    let povm = Povm::from_vectors(vectors, ComplexMatrix::zeros(d, d))?;
    if set.spans_space() {
        return Ok(povm.covariant());
    }
    let support = &root * &(&frame * &root);
    let complement = (&ComplexMatrix::identity(d) - &support).scale_real(set.prior());
    let ops = povm.conclusive().iter().map(|p| (p + &complement).hermitian_part()).collect();
    Ok(Povm::new(ops, ComplexMatrix::zeros(d, d))?.covariant())
}

/// Optimality residual `max_m max(0, -λ_min(Y - ξ_m ρ_m))` with
/// `Y = herm(Σ_k ξ_k ρ_k Π_k)`. Zero certifies a minimum-error measurement.
pub fn check_me_optimality(set: &AguStateSet, povm: &Povm, tol: &Tolerances) -> Result<f64> {
    if povm.dim() != set.dim() || povm.len() != set.len() {
        return Err(Error::Dimension("POVM does not match the state set".into()));
    }
    if povm.failure().max_abs() > tol.validity {
        return Err(Error::InvalidPovm("minimum-error certificate needs Π_? = 0".into()));
    }
    let d = set.dim();
    let xi = set.prior();
    let y = set
        .states()
        .iter()
        .zip(povm.conclusive())
        .fold(ComplexMatrix::zeros(d, d), |acc, (rho, p)| &acc + &(rho * p).scale_real(xi))
        .hermitian_part();
    let mut residual: f64 = 0.0;
    for rho in set.states() {
        let gap = &y - &rho.scale_real(xi);
        let eig = herm_eigen(&gap, tol.validity)?;
        residual = residual.max(-eig.values.last().copied().unwrap_or(0.0));
    }
    Ok(residual)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeMethod {
    SquareRoot,
    Iterative,
}

#[derive(Clone, Debug)]
pub struct MeResult {
    pub povm: Povm,
    pub correct: f64,
    pub residual: f64,
    pub method: MeMethod,
    pub certified: bool,
}

/// Minimum-error measurement: the SRM when its certificate holds, otherwise
/// the fixed-point iteration `Π_k ← R⁻¹ ρ_k Π_k ρ_k R⁻¹`,
/// `R = (Σ_k ρ_k Π_k ρ_k)^{1/2}`, started from the SRM.
pub fn minimum_error(set: &AguStateSet, tol: &Tolerances) -> Result<MeResult> {
    let povm = srm(set, tol)?;
    let residual = check_me_optimality(set, &povm, tol)?;
    let correct = outcome_probs(set, &povm)?.avg_correct();
    if residual <= ME_CERTIFICATE_TOLERANCE {
        return Ok(MeResult {
            povm,
            correct,
            residual,
            method: MeMethod::SquareRoot,
            certified: true,
        });
    }

    let d = set.dim();
    let mut ops: Vec<ComplexMatrix> = povm.conclusive().to_vec();
    let mut best = (residual, ops.clone());
    for step in 0..ITERATION_LIMIT {
        let weighted: Vec<ComplexMatrix> = set.states().iter().zip(&ops).map(|(rho, p)| &(rho * p) * rho).collect();
        let total = weighted.iter().fold(ComplexMatrix::zeros(d, d), |acc, w| &acc + w).hermitian_part();
        let r_inv = pinv(&psd_sqrt(&total, tol.validity)?, None, tol.validity)?;
        ops = weighted.iter().map(|w| (&(&r_inv * w) * &r_inv).hermitian_part()).collect();
        if step % 50 == 49 {
            let candidate = Povm::new(ops.clone(), ComplexMatrix::zeros(d, d))?;
            let r = check_me_optimality(set, &candidate, tol)?;
            if r < best.0 {
                best = (r, ops.clone());
            }
            if r <= ME_CERTIFICATE_TOLERANCE {
                break;
            }
        }
    }
    let povm = Povm::new(best.1, ComplexMatrix::zeros(d, d))?.covariant();
    let correct = outcome_probs(set, &povm)?.avg_correct();
    Ok(MeResult {
        povm,
        correct,
        residual: best.0,
        method: MeMethod::Iterative,
        certified: best.0 <= ME_CERTIFICATE_TOLERANCE,
    })
}
