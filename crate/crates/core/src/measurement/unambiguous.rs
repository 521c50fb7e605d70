//! Error-free filtering of linearly independent sets.
//!
//! In the character basis a covariant filter `X = I - Π_?` is block diagonal,
//! `X = ⊕_χ V_χ X_χ V_χ†`. With `A_χ = V_χ† [ψ_{e,1} … ψ_{e,R}]` the filtered
//! states are mutually orthogonal exactly when `A_χ† X_χ A_χ` equals one
//! matrix `Q` for every character, and then the success probability is
//! `M Tr Q`. For independent sets every `A_χ` is square and invertible, so the
//! best filter solves `max Tr Q` subject to `0 ≤ Q ≤ A_χ† A_χ`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::numerics::{herm_eigen, pinv, Complex64, ComplexMatrix, Tolerances};
use crate::states::AguStateSet;
use crate::symmetry::CharacterBasis;

use super::trace_product;

/// Minimal failure probability of error-free discrimination and the matching
/// filter blocks `X_χ`, in character-block order.
pub(crate) fn unambiguous_filter(
    set: &AguStateSet,
    basis: &CharacterBasis,
    tol: &Tolerances,
) -> Result<(f64, Vec<ComplexMatrix>)> {
    let r = set.rank();
    if !set.is_linearly_independent() || basis.blocks.len() != set.len() || basis.blocks.iter().any(|b| b.len != r) {
        return Err(Error::InvalidStates("error-free filtering needs linearly independent states".into()));
    }
    let mut amps = Vec::with_capacity(basis.blocks.len());
    let mut grams = Vec::with_capacity(basis.blocks.len());
    for block in &basis.blocks {
        let vs = basis.block_vectors(block);
        let a = ComplexMatrix::from_fn(block.len, r, |i, j| crate::numerics::inner(&vs[i], &set.seeds()[j]));
        grams.push((&a.adjoint() * &a).hermitian_part());
        amps.push(a);
    }
    let q = max_trace_below(&grams, tol)?;
    let p_u = (1.0 - set.len() as f64 * q.trace().re).clamp(0.0, 1.0);
    let blocks = amps
        .iter()
        .zip(&grams)
        .map(|(a, g)| {
            let gi = pinv(g, None, tol.validity)?;
            let x = (&(&(&(a * &gi) * &q) * &gi) * &a.adjoint()).hermitian_part();
            Ok(herm_eigen(&x, tol.validity)?.map_values(|v| v.clamp(0.0, 1.0)))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((p_u, blocks))
}

/// `argmax Tr Q` over Hermitian `0 ≤ Q ≤ G_i` by a log-barrier Newton method.
pub(crate) fn max_trace_below(bounds: &[ComplexMatrix], tol: &Tolerances) -> Result<ComplexMatrix> {
    let n = bounds[0].rows();
    let floor = bounds
        .iter()
        .map(|g| Ok(herm_eigen(g, tol.validity)?.values.last().copied().unwrap_or(0.0)))
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    if floor <= 1e-14 {
        return Ok(ComplexMatrix::zeros(n, n));
    }
    let basis = hermitian_basis(n);
    let mut q = ComplexMatrix::identity(n).scale_real(0.5 * floor);

    let barrier_terms = ((bounds.len() + 1) * n) as f64;
    let mut t = 1.0 / floor;
    while barrier_terms / t > 1e-13 * floor.max(1e-3) {
        for _ in 0..100 {
            let Some(value) = barrier(&q, bounds, t, tol)? else {
                return Err(Error::InvalidArgument("barrier iterate left the feasible set".into()));
            };
            let q_inv = pinv(&q, None, tol.validity)?;
            let slacks = bounds
                .iter()
                .map(|g| pinv(&(g - &q).hermitian_part(), None, tol.validity))
                .collect::<Result<Vec<_>>>()?;
            let k = basis.len();
            let grad: Vec<f64> = basis
                .iter()
                .map(|e| {
                    t * e.trace().re + trace_product(&q_inv, e) - slacks.iter().map(|z| trace_product(z, e)).sum::<f64>()
                })
                .collect();
            let hess = DMatrix::from_fn(k, k, |i, j| {
                let curvature = |z: &ComplexMatrix| trace_product(&(&(z * &basis[i]) * z), &basis[j]);
                curvature(&q_inv) + slacks.iter().map(curvature).sum::<f64>()
            });
            let Some(chol) = hess.cholesky() else {
                break;
            };
            let step = chol.solve(&nalgebra::DVector::from_vec(grad.clone()));
            let decrement: f64 = step.iter().zip(&grad).map(|(s, g)| s * g).sum();
            if decrement < 1e-14 {
                break;
            }
            let mut alpha = 1.0;
            let mut accepted = false;
            while alpha > 1e-12 {
                let candidate = basis
                    .iter()
                    .zip(step.iter())
                    .fold(q.clone(), |acc, (e, &s)| &acc + &e.scale_real(alpha * s));
                if let Some(v) = barrier(&candidate, bounds, t, tol)? {
                    if v >= value + 0.25 * alpha * decrement {
                        q = candidate;
                        accepted = true;
                        break;
                    }
                }
                alpha *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        t *= 8.0;
    }
    Ok(q)
}

fn barrier(q: &ComplexMatrix, bounds: &[ComplexMatrix], t: f64, tol: &Tolerances) -> Result<Option<f64>> {
    let log_det = |m: &ComplexMatrix| -> Result<Option<f64>> {
        let values = herm_eigen(&m.hermitian_part(), tol.validity)?.values;
        if values.iter().any(|&v| v <= 0.0) {
            return Ok(None);
        }
        Ok(Some(values.iter().map(|v| v.ln()).sum()))
    };
    let Some(mut total) = log_det(q)? else {
        return Ok(None);
    };
    for g in bounds {
        match log_det(&(g - q))? {
            Some(v) => total += v,
            None => return Ok(None),
        }
    }
    Ok(Some(total + t * q.trace().re))
}

pub(crate) fn hermitian_basis(n: usize) -> Vec<ComplexMatrix> {
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        let mut e = ComplexMatrix::zeros(n, n);
        e[(i, i)] = Complex64::new(1.0, 0.0);
        out.push(e);
        for j in i + 1..n {
            let mut re = ComplexMatrix::zeros(n, n);
            re[(i, j)] = Complex64::new(1.0, 0.0);
            re[(j, i)] = Complex64::new(1.0, 0.0);
            out.push(re);
            let mut im = ComplexMatrix::zeros(n, n);
            im[(i, j)] = Complex64::new(0.0, 1.0);
            im[(j, i)] = Complex64::new(0.0, -1.0);
            out.push(im);
        }
    }
    out
}
