use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{outcome_probs, Povm};
use crate::error::Result;
use crate::numerics::{psd_inv_sqrt, Complex64, ComplexMatrix, Tolerances};
use crate::states::AguStateSet;

/// Outcome of comparing a solver value against random valid measurements.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DominanceReport {
    pub samples: usize,
    pub seed: u64,
    pub best_random_correct: f64,
    pub max_excess: f64,
    pub passed: bool,
}

/// Random measurement with `M + 1` outcomes whose average failure probability
/// on `set` is exactly `p`.
pub fn random_povm_at_failure<R: Rng + ?Sized>(set: &AguStateSet, p: f64, rng: &mut R, tol: &Tolerances) -> Result<Povm> {
    let d = set.dim();
    let outcomes = set.len() + 1;
    let min_rank = d.div_ceil(outcomes).max(1);
    let mut raw = Vec::with_capacity(outcomes);
    for _ in 0..outcomes {
        let k = min_rank + rng.random_range(0..=set.rank());
        let mut g = ComplexMatrix::zeros(d, d);
        for _ in 0..k {
            let v: Vec<Complex64> = (0..d)
                .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
                .collect();
            g = &g + &ComplexMatrix::projector(&v);
        }
        raw.push(g);
    }
    let total = raw.iter().fold(ComplexMatrix::zeros(d, d), |acc, g| &acc + g).hermitian_part();
    let root = psd_inv_sqrt(&total, None, tol.validity)?;
    let mut ops: Vec<ComplexMatrix> = raw.iter().map(|g| (&(&root * g) * &root).hermitian_part()).collect();
    let failure = ops.pop().expect("at least two outcomes");
    let base = Povm::new(ops, failure)?;
    let f0 = outcome_probs(set, &base)?.avg_failure();

    let m = set.len() as f64;
    if f0 > p {
        // Blend towards the variant that moves Π_? onto the conclusive outcomes.
        let t = p / f0;
        let share = base.failure().scale_real((1.0 - t) / m);
        let ops = base.conclusive().iter().map(|op| op + &share).collect();
        Povm::new(ops, base.failure().scale_real(t))
    } else {
        let t = if f0 < 1.0 { (1.0 - p) / (1.0 - f0) } else { 1.0 };
        let ops = base.conclusive().iter().map(|op| op.scale_real(t)).collect();
        let failure = &base.failure().scale_real(t) + &ComplexMatrix::identity(d).scale_real(1.0 - t);
        Povm::new(ops, failure)
    }
}

/// Draws `samples` random measurements at failure `p` and reports by how much
/// the best of them beats `correct`.
pub fn dominance_check(
    set: &AguStateSet,
    p: f64,
    correct: f64,
    samples: usize,
    seed: u64,
    tol: &Tolerances,
) -> Result<DominanceReport> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut best = f64::NEG_INFINITY;
    for _ in 0..samples {
        let povm = random_povm_at_failure(set, p, &mut rng, tol)?;
        best = best.max(outcome_probs(set, &povm)?.avg_correct());
    }
    let max_excess = (best - correct).max(0.0);
    Ok(DominanceReport {
        samples,
        seed,
        best_random_correct: best,
        max_excess,
        passed: max_excess <= 1e-6,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measurement::validate_povm;
    use crate::numerics::real_vector;
    use crate::symmetry::{AbelianGroup, UnitaryRep};

    #[test]
    fn random_povms_hit_the_failure_target() {
        let tol = Tolerances::default();
        let rep = UnitaryRep::regular(AbelianGroup::cyclic(3).unwrap());
        let set = AguStateSet::cyclic_pure(rep.matrix(1), 3, real_vector(&[0.5f64.sqrt(), 0.3f64.sqrt(), 0.2f64.sqrt()]), &tol).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(7);
        for &p in &[0.0, 0.1, 0.5, 0.9, 1.0] {
            for _ in 0..20 {
                let povm = random_povm_at_failure(&set, p, &mut rng, &tol).unwrap();
                assert!(validate_povm(&povm, None) <= 1e-9);
                let f = outcome_probs(&set, &povm).unwrap().avg_failure();
                assert!((f - p).abs() <= 1e-9, "{f} vs {p}");
            }
        }
    }
}
