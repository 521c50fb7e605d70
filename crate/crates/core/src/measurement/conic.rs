//! Covariant inconclusive measurements as a conic program.
//!
//! With `Π_m = U_m X U_m†` and `Π_? = I - Σ_m U_m X U_m†` the average success
//! probability is `Tr(ρ_e X)` and the failure probability is
//! `1 - M Tr(ρ̄ X)`. Since `Σ_m U_m X U_m† = M ⊕_χ P_χ X P_χ`, the feasible set
//! is `X ≥ 0`, `M V_χ† X V_χ ≤ I` on every character block and
//! `Tr(ρ̄ X) = (1 - p)/M`.

use nalgebra::{DMatrix, DVector};

use super::unambiguous::hermitian_basis;
use super::{trace_product, Povm};
use crate::error::{Error, Result};
use crate::numerics::{herm_eigen, pinv, Complex64, ComplexMatrix, Tolerances};
use crate::states::AguStateSet;
use crate::symmetry::CharacterBasis;

/// Target duality gap of the barrier method.
const GAP: f64 = 1e-12;
/// Eigenvalues of `X` below this are dropped when reading off detection
/// vectors.
const RANK_CUTOFF: f64 = 1e-9;

struct Program {
    m: f64,
    objective: Vec<f64>,
    constraint: Vec<f64>,
    rhs: f64,
    frames: Vec<ComplexMatrix>,
    basis: Vec<ComplexMatrix>,
    tol: Tolerances,
}

impl Program {
    fn new(set: &AguStateSet, characters: &CharacterBasis, p: f64, tol: &Tolerances) -> Result<Self> {
        let d = set.dim();
        let basis = hermitian_basis(d);
        let mean = set.frame_operator().scale_real(set.prior());
        let frames = characters
            .blocks
            .iter()
            .map(|b| ComplexMatrix::from_columns(characters.block_vectors(b)))
            .collect::<Result<Vec<_>>>()?;
        let m = set.len() as f64;
        Ok(Program {
            m,
            objective: basis.iter().map(|e| trace_product(set.state(0), e)).collect(),
            constraint: basis.iter().map(|e| trace_product(&mean, e)).collect(),
            rhs: (1.0 - p) / m,
            frames,
            basis,
            tol: *tol,
        })
    }

    fn matrix(&self, x: &[f64]) -> ComplexMatrix {
        let d = self.basis[0].rows();
        self.basis
            .iter()
            .zip(x)
            .fold(ComplexMatrix::zeros(d, d), |acc, (e, &c)| &acc + &e.scale_real(c))
    }

    fn slacks(&self, x: &ComplexMatrix) -> Vec<ComplexMatrix> {
        self.frames
            .iter()
            .map(|v| {
                let block = (&(&v.adjoint() * x) * v).scale_real(self.m);
                (&ComplexMatrix::identity(v.cols()) - &block).hermitian_part()
            })
            .collect()
    }

    /// `t ⟨c, x⟩ + log det X + Σ_χ log det S_χ`, or `None` outside the cone.
    fn barrier(&self, x: &[f64], t: f64) -> Result<Option<f64>> {
        let xm = self.matrix(x);
        let mut total = t * dot(&self.objective, x);
        for m in std::iter::once(xm.hermitian_part()).chain(self.slacks(&xm)) {
            let values = herm_eigen(&m, self.tol.validity)?.values;
            if values.iter().any(|&v| v <= 0.0) {
                return Ok(None);
            }
            total += values.iter().map(|v| v.ln()).sum::<f64>();
        }
        Ok(Some(total))
    }

    fn newton_step(&self, x: &[f64], t: f64) -> Result<Option<(DVector<f64>, f64)>> {
        let xm = self.matrix(x);
        let x_inv = pinv(&xm.hermitian_part(), None, self.tol.validity)?;
        let s_inv = self
            .slacks(&xm)
            .iter()
            .map(|s| pinv(s, None, self.tol.validity))
            .collect::<Result<Vec<_>>>()?;
        let k = self.basis.len();
        let ys: Vec<ComplexMatrix> = self.basis.iter().map(|e| &x_inv * e).collect();
        let zs: Vec<Vec<ComplexMatrix>> = self
            .frames
            .iter()
            .zip(&s_inv)
            .map(|(v, si)| self.basis.iter().map(|e| si * &(&(&v.adjoint() * e) * v)).collect())
            .collect();
        let grad = DVector::from_fn(k, |i, _| {
            t * self.objective[i] + ys[i].trace().re - self.m * zs.iter().map(|z| z[i].trace().re).sum::<f64>()
        });
        let hess = DMatrix::from_fn(k, k, |i, j| {
            trace_product(&ys[i], &ys[j]) + self.m * self.m * zs.iter().map(|z| trace_product(&z[i], &z[j])).sum::<f64>()
        });
        let Some(chol) = hess.cholesky() else {
            return Ok(None);
        };
        let a = DVector::from_vec(self.constraint.clone());
        let hg = chol.solve(&grad);
        let ha = chol.solve(&a);
        let step = &hg - &ha * (a.dot(&hg) / a.dot(&ha));
        let decrement = step.dot(&grad);
        Ok(Some((step, decrement)))
    }

    fn solve(&self) -> Result<ComplexMatrix> {
        let d = self.basis[0].rows();
        let mut x: Vec<f64> = vec![0.0; self.basis.len()];
        // Diagonal entries come first in each row of the Hermitian basis.
        let scale = self.rhs / dot(&self.constraint, &diagonal_mask(d));
        for (xi, mask) in x.iter_mut().zip(diagonal_mask(d)) {
            *xi = scale * mask;
        }
        let terms = (d + self.frames.iter().map(|v| v.cols()).sum::<usize>()) as f64;
        let mut t = 1.0;
        while terms / t > GAP {
            for _ in 0..100 {
                let Some(value) = self.barrier(&x, t)? else {
                    return Err(Error::InvalidArgument("barrier iterate left the feasible set".into()));
                };
                let Some((step, decrement)) = self.newton_step(&x, t)? else {
                    break;
                };
                if decrement < 1e-14 {
                    break;
                }
                let mut alpha = 1.0;
                let mut accepted = false;
                while alpha > 1e-12 {
                    let candidate: Vec<f64> = x.iter().zip(step.iter()).map(|(a, s)| a + alpha * s).collect();
                    if let Some(v) = self.barrier(&candidate, t)? {
                        if v >= value + 0.25 * alpha * decrement {
                            x = candidate;
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
        Ok(self.matrix(&x).hermitian_part())
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn diagonal_mask(d: usize) -> Vec<f64> {
    let mut mask = Vec::with_capacity(d * d);
    for i in 0..d {
        mask.push(1.0);
        mask.extend(std::iter::repeat_n(0.0, 2 * (d - i - 1)));
    }
    mask
}

/// Optimal covariant conclusive seed operator `X` at failure probability
/// `p`, for `0 < p < 1`.
pub(crate) fn optimal_seed_operator(
    set: &AguStateSet,
    characters: &CharacterBasis,
    p: f64,
    tol: &Tolerances,
) -> Result<ComplexMatrix> {
    if p <= 0.0 || p >= 1.0 || p.is_nan() {
        return Err(Error::InvalidArgument(format!("conic program needs 0 < p < 1, got {p}")));
    }
    Program::new(set, characters, p, tol)?.solve()
}

/// The covariant measurement generated by `X`, with at most `rank` detection
/// vectors per outcome; `None` when `X` has larger numerical rank.
pub(crate) fn povm_from_seed(set: &AguStateSet, x: &ComplexMatrix, rank: usize, tol: &Tolerances) -> Result<Option<Povm>> {
    let d = set.dim();
    let eig = herm_eigen(x, tol.validity)?;
    let kept: Vec<usize> = (0..d).filter(|&k| eig.values[k] > RANK_CUTOFF).collect();
    if kept.len() > rank {
        return Ok(None);
    }
    let mut seeds: Vec<Vec<Complex64>> = kept
        .iter()
        .map(|&k| eig.vector(k).iter().map(|z| z * eig.values[k].sqrt()).collect())
        .collect();
    seeds.resize(rank, vec![Complex64::new(0.0, 0.0); d]);
    let vectors: Vec<Vec<Vec<Complex64>>> = set
        .group()
        .elements()
        .map(|m| seeds.iter().map(|v| set.rep().matrix(m).apply(v)).collect())
        .collect();
    let total = vectors
        .iter()
        .flatten()
        .fold(ComplexMatrix::zeros(d, d), |acc, v| &acc + &ComplexMatrix::projector(v));
    let failure = (&ComplexMatrix::identity(d) - &total).hermitian_part();
    Ok(Some(Povm::from_vectors(vectors, failure)?.covariant()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measurement::{outcome_probs, validate_povm};
    use crate::numerics::{c64, real_vector};
    use crate::symmetry::{AbelianGroup, UnitaryRep};

    #[test]
    fn pure_triple_reaches_the_water_filling_value() {
        let tol = Tolerances::default();
        let rep = UnitaryRep::regular(AbelianGroup::cyclic(3).unwrap());
        let set = AguStateSet::cyclic_pure(rep.matrix(1), 3, real_vector(&[0.5f64.sqrt(), 0.3f64.sqrt(), 0.2f64.sqrt()]), &tol)
            .unwrap();
        let basis = rep.character_basis(&tol).unwrap();
        let amps: Vec<f64> = set.character_coefficients(&basis).iter().map(|c| c[0].norm()).collect();
        for p in [0.1, 0.4, 0.8] {
            // Water level by scanning, independent of the solver's bisection.
            let mut level = 0.0;
            while amps.iter().map(|a| a.min(level).powi(2)).sum::<f64>() < 1.0 - p {
                level += 1e-7;
            }
            let expected = amps.iter().map(|a| a.min(level)).sum::<f64>().powi(2) / 3.0;
            let x = optimal_seed_operator(&set, &basis, p, &tol).unwrap();
            let povm = povm_from_seed(&set, &x, 1, &tol).unwrap().unwrap();
            let probs = outcome_probs(&set, &povm).unwrap();
            assert!(validate_povm(&povm, Some(set.rep())) <= 1e-9);
            assert!((probs.avg_failure() - p).abs() <= 1e-8);
            assert!((probs.avg_correct() - expected).abs() <= 1e-5, "{p}: {} vs {expected}", probs.avg_correct());
        }
    }

    #[test]
    fn rank_above_the_limit_is_reported() {
        let tol = Tolerances::default();
        let rep = UnitaryRep::regular(AbelianGroup::cyclic(2).unwrap());
        let seeds = vec![vec![c64(0.6, 0.0), c64(0.1, 0.2)], vec![c64(0.3, -0.1), c64(0.7, 0.0)]];
        let t: f64 = seeds.iter().flatten().map(|z: &Complex64| z.norm_sqr()).sum::<f64>().sqrt();
        let seeds = seeds.into_iter().map(|v| v.into_iter().map(|z| z / t).collect()).collect();
        let set = AguStateSet::new(rep.group(), rep.clone(), seeds, &tol).unwrap();
        let x = ComplexMatrix::identity(2).scale_real(0.25);
        assert!(povm_from_seed(&set, &x, 1, &tol).unwrap().is_none());
        assert!(povm_from_seed(&set, &x, 2, &tol).unwrap().is_some());
    }
}
