//! Projective, covariant dilation of a covariant inconclusive measurement.
//!
//! Coordinates: `ℋ` is the first `D` coordinates of `ℋ̃ = C^{MR}`, which is the
//! first `MR` coordinates of `ℋ_ex = C^{2MR}`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measurement::{validate_povm, OimSolution, Povm};
use crate::numerics::{complete_onb, gram_violation, herm_eigen, inner, ComplexMatrix, Tolerances};
use crate::states::AguStateSet;
use crate::symmetry::AbelianGroup;

/// Singular values of `Λ` at or below this are treated as its kernel.
const SUPPORT_CUTOFF: f64 = 1e-10;
/// Eigenvalues of `Π_?` this close to 0 or 1 are rounded there before square
/// roots are taken.
const SNAP: f64 = 1e-13;

fn snap(l: f64) -> f64 {
    if l < SNAP {
        0.0
    } else if l > 1.0 - SNAP {
        1.0
    } else {
        l
    }
}

#[derive(Clone, Debug)]
pub struct ProjectiveDilation {
    group: AbelianGroup,
    messages: usize,
    rank: usize,
    dim: usize,
    /// `ω^{(s)}_{m,r}` at index `(s·M + m)·R + r`.
    omega: Vec<Vec<Complex64>>,
    /// `λ_d` for `d < MR`, with `λ_d = 1` for `d ≥ D`.
    pub lambda: Vec<f64>,
    /// `φ_d` in `ℋ̃`.
    pub phi: Vec<Vec<Complex64>>,
    /// `Λ = (I - Π_?)^{1/2}` on `ℋ`.
    pub lambda_op: ComplexMatrix,
    /// `π'_{m,r} = Λ⁺ π_{m,r}` in `ℋ̃`, index `m·R + r`.
    pub pi_prime: Vec<Vec<Complex64>>,
    pub v0: Vec<Vec<Complex64>>,
    pub v1: Vec<Vec<Complex64>>,
    /// Isometries `F_s: ℋ̃ → ℋ_ex`.
    pub f0: ComplexMatrix,
    pub f1: ComplexMatrix,
}

impl ProjectiveDilation {
    pub fn group(&self) -> &AbelianGroup {
        &self.group
    }

    pub fn messages(&self) -> usize {
        self.messages
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    /// `D`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `2MR`.
    pub fn dim_ex(&self) -> usize {
        2 * self.messages * self.rank
    }

    pub fn index(&self, s: usize, m: usize, r: usize) -> usize {
        (s * self.messages + m) * self.rank + r
    }

    pub fn omega(&self, s: usize, m: usize, r: usize) -> &[Complex64] {
        &self.omega[self.index(s, m, r)]
    }

    pub fn omega_vectors(&self) -> &[Vec<Complex64>] {
        &self.omega
    }

    pub fn omega_vectors_mut(&mut self) -> &mut [Vec<Complex64>] {
        &mut self.omega
    }

    /// `D × 2MR` map onto the first `D` coordinates.
    pub fn projection(&self) -> ComplexMatrix {
        coordinate_projection(self.dim, self.dim_ex())
    }

    /// `MR × 2MR` map `P₁` onto `ℋ̃`.
    pub fn projection_tilde(&self) -> ComplexMatrix {
        coordinate_projection(self.messages * self.rank, self.dim_ex())
    }

    /// Projector `P_Λ` onto the support of `Λ` inside `ℋ̃`.
    pub fn support_projector(&self) -> ComplexMatrix {
        let n = self.messages * self.rank;
        self.phi
            .iter()
            .zip(&self.lambda)
            .filter(|(_, &l)| (1.0 - l).max(0.0).sqrt() > SUPPORT_CUTOFF)
            .fold(ComplexMatrix::zeros(n, n), |acc, (v, _)| &acc + &ComplexMatrix::projector(v))
    }

    fn projector_sum(&self, s: usize, messages: impl Iterator<Item = usize>) -> ComplexMatrix {
        let n = self.dim_ex();
        let mut out = ComplexMatrix::zeros(n, n);
        for m in messages {
            for r in 0..self.rank {
                out = &out + &ComplexMatrix::projector(self.omega(s, m, r));
            }
        }
        out
    }

    /// `Ω_m = Σ_r |ω^{(0)}_{m,r}⟩⟨ω^{(0)}_{m,r}|`.
    pub fn conclusive_projector(&self, m: usize) -> ComplexMatrix {
        self.projector_sum(0, std::iter::once(m))
    }

    /// `Ω_? = Σ_{m,r} |ω^{(1)}_{m,r}⟩⟨ω^{(1)}_{m,r}|`.
    pub fn failure_projector(&self) -> ComplexMatrix {
        self.projector_sum(1, 0..self.messages)
    }

    /// The projective measurement on `ℋ_ex`.
    pub fn pvm(&self) -> Result<Povm> {
        Povm::new(
            (0..self.messages).map(|m| self.conclusive_projector(m)).collect(),
            self.failure_projector(),
        )
    }

    /// `P X P†`.
    pub fn compress(&self, x: &ComplexMatrix) -> ComplexMatrix {
        x.submatrix(0, 0, self.dim, self.dim)
    }

    /// `P† ρ P`.
    pub fn embed(&self, rho: &ComplexMatrix) -> ComplexMatrix {
        rho.embed(self.dim_ex(), self.dim_ex())
    }
}

fn coordinate_projection(rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |i, j| Complex64::new(if i == j { 1.0 } else { 0.0 }, 0.0))
}

fn pad(v: &[Complex64], n: usize) -> Vec<Complex64> {
    let mut out = v.to_vec();
    out.resize(n, Complex64::new(0.0, 0.0));
    out
}

fn detection_vectors(povm: &Povm, rank: usize, what: &str, tol: &Tolerances) -> Result<Vec<Vec<Vec<Complex64>>>> {
    if let Some(vs) = povm.vectors() {
        if vs.iter().all(|row| row.len() == rank) {
            return Ok(vs.to_vec());
        }
        return Err(Error::InvalidPovm(format!("{what} must have {rank} detection vectors per outcome")));
    }
    if povm.conclusive().iter().all(|p| p.max_abs() <= tol.validity) {
        let zero = vec![Complex64::new(0.0, 0.0); povm.dim()];
        return Ok(vec![vec![zero; rank]; povm.len()]);
    }
    Err(Error::InvalidPovm(format!("{what} lacks rank-one detection vectors")))
}

/// Rows with orthonormal entries completed to a square unitary; returns its
/// columns.
fn unitary_columns(rows: &[Vec<Complex64>], n: usize, tol: &Tolerances) -> Result<Vec<Vec<Complex64>>> {
    let full = complete_onb(rows, n, tol)?;
    Ok((0..n).map(|j| full.iter().map(|row| row[j]).collect()).collect())
}

pub fn build_dilation(set: &AguStateSet, oim: &OimSolution, me: &Povm, tol: &Tolerances) -> Result<ProjectiveDilation> {
    let (mm, rr, d) = (set.len(), set.rank(), set.dim());
    let n = mm * rr;
    if d > n {
        return Err(Error::Dimension(format!("dimension {d} exceeds MR = {n}")));
    }
    for (povm, what) in [(&oim.povm, "inconclusive measurement"), (me, "minimum-error measurement")] {
        if povm.dim() != d || povm.len() != mm {
            return Err(Error::Dimension(format!("{what} does not match the state set")));
        }
        if !povm.is_covariant() {
            return Err(Error::InvalidPovm(format!("{what} is not marked covariant")));
        }
        let violation = validate_povm(povm, Some(set.rep()));
        if violation > tol.validity {
            return Err(Error::InvalidPovm(format!("{what} violates validity or covariance by {violation:e}")));
        }
    }
    if me.failure().max_abs() > tol.validity {
        return Err(Error::InvalidPovm("minimum-error measurement has a failure outcome".into()));
    }
    let pi = detection_vectors(&oim.povm, rr, "inconclusive measurement", tol)?;
    let pi_me = detection_vectors(me, rr, "minimum-error measurement", tol)?;

    // Schatten data of Π_? padded to ℋ̃.
    let fail = herm_eigen(oim.povm.failure(), tol.validity)?;
    let mut lambda: Vec<f64> = fail.values.iter().map(|&l| snap(l)).collect();
    let mut phi: Vec<Vec<Complex64>> = (0..d).map(|k| pad(&fail.vector(k), n)).collect();
    for k in d..n {
        lambda.push(1.0);
        let mut e = vec![Complex64::new(0.0, 0.0); n];
        e[k] = Complex64::new(1.0, 0.0);
        phi.push(e);
    }
    let singular: Vec<f64> = lambda.iter().map(|l| (1.0 - l).max(0.0).sqrt()).collect();
    let lambda_op = fail.map_values(|l| (1.0 - snap(l)).sqrt());

    // v⁽⁰⁾: π' = Λ⁺π in the φ-support coordinates, then a unitary completion.
    let support: Vec<usize> = (0..n).filter(|&k| singular[k] > SUPPORT_CUTOFF).collect();
    let kernel: Vec<usize> = (0..n).filter(|&k| singular[k] <= SUPPORT_CUTOFF).collect();
    let flat_pi: Vec<Vec<Complex64>> = pi.iter().flatten().map(|v| pad(v, n)).collect();
    let coords: Vec<Vec<Complex64>> = support
        .iter()
        .map(|&k| flat_pi.iter().map(|v| inner(&phi[k], v) / singular[k]).collect())
        .collect();
    let pi_prime: Vec<Vec<Complex64>> = (0..n)
        .map(|j| {
            let mut out = vec![Complex64::new(0.0, 0.0); n];
            for (row, &k) in coords.iter().zip(&support) {
                for (o, p) in out.iter_mut().zip(&phi[k]) {
                    *o += row[j] * p;
                }
            }
            out
        })
        .collect();
    let order: Vec<usize> = support.iter().chain(&kernel).copied().collect();
    let v0: Vec<Vec<Complex64>> = unitary_columns(&coords, n, tol)?
        .into_iter()
        .map(|col| {
            let mut out = vec![Complex64::new(0.0, 0.0); n];
            for (c, &k) in col.iter().zip(&order) {
                for (o, p) in out.iter_mut().zip(&phi[k]) {
                    *o += c * p;
                }
            }
            out
        })
        .collect();

    // v⁽¹⁾ from the minimum-error vectors in standard coordinates.
    let flat_me: Vec<Vec<Complex64>> = pi_me.iter().flatten().cloned().collect();
    let me_rows: Vec<Vec<Complex64>> = (0..d).map(|i| flat_me.iter().map(|v| v[i]).collect()).collect();
    let v1 = unitary_columns(&me_rows, n, tol)?;

    // φ_d^{(0)} = √(1-λ_d) φ_d ⊕ √λ_d e'_d,  φ_d^{(1)} = √λ_d φ_d ⊕ -√(1-λ_d) e'_d.
    let ex = 2 * n;
    let mut f0 = ComplexMatrix::zeros(ex, n);
    let mut f1 = ComplexMatrix::zeros(ex, n);
    for k in 0..n {
        let (a, b) = (singular[k], lambda[k].sqrt());
        let outer_phi = ComplexMatrix::outer(&pad(&phi[k], ex), &phi[k]);
        let mut outer_e = ComplexMatrix::zeros(ex, n);
        for j in 0..n {
            outer_e[(n + k, j)] = phi[k][j].conj();
        }
        f0 = &(&f0 + &outer_phi.scale_real(a)) + &outer_e.scale_real(b);
        f1 = &(&f1 + &outer_phi.scale_real(b)) - &outer_e.scale_real(a);
    }

    let omega = v0.iter().map(|v| f0.apply(v)).chain(v1.iter().map(|v| f1.apply(v))).collect();
    Ok(ProjectiveDilation {
        group: set.group().clone(),
        messages: mm,
        rank: rr,
        dim: d,
        omega,
        lambda,
        phi,
        lambda_op,
        pi_prime,
        v0,
        v1,
        f0,
        f1,
    })
}

/// Max-norm residuals of the dilation identities.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DilationResiduals {
    pub onb: f64,
    pub completeness: f64,
    pub projective: f64,
    pub compression: f64,
    pub isometry_blocks: f64,
    pub covariance: f64,
    pub statistics: f64,
}

impl DilationResiduals {
    pub fn max(&self) -> f64 {
        [
            self.onb,
            self.completeness,
            self.projective,
            self.compression,
            self.isometry_blocks,
            self.covariance,
            self.statistics,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

pub fn verify_dilation(dil: &ProjectiveDilation, set: &AguStateSet, oim: &OimSolution) -> Result<DilationResiduals> {
    let (mm, rr, d) = (dil.messages, dil.rank, dil.dim);
    let ex = dil.dim_ex();
    if set.len() != mm || set.rank() != rr || set.dim() != d || oim.povm.dim() != d {
        return Err(Error::Dimension("dilation does not match the state set".into()));
    }
    let onb = gram_violation(&dil.omega);
    let conclusive: Vec<ComplexMatrix> = (0..mm).map(|m| dil.conclusive_projector(m)).collect();
    let failure = dil.failure_projector();
    let total = conclusive.iter().fold(failure.clone(), |acc, p| &acc + p);
    let completeness = total.distance(&ComplexMatrix::identity(ex));
    let projective = conclusive
        .iter()
        .chain(std::iter::once(&failure))
        .map(|p| (p * p).distance(p))
        .fold(0.0, f64::max);

    let mut compression = dil.compress(&failure).distance(oim.povm.failure());
    for (m, p) in conclusive.iter().enumerate() {
        compression = compression.max(dil.compress(p).distance(oim.povm.operator(m)));
    }

    let n = mm * rr;
    let pf0 = dil.f0.submatrix(0, 0, d, n);
    let pf1 = dil.f1.submatrix(0, 0, d, n);
    let failure_root = herm_eigen(oim.povm.failure(), f64::INFINITY)?.map_values(|l| snap(l).sqrt());
    let isometry_blocks = pf0
        .distance(&dil.lambda_op.embed(d, n))
        .max(pf1.distance(&failure_root.embed(d, n)))
        .max(dil.f0.isometry_violation())
        .max(dil.f1.isometry_violation());

    let g = set.group();
    let mut covariance: f64 = 0.0;
    for s in 0..2 {
        for m in g.elements() {
            for k in g.elements() {
                for r in 0..rr {
                    let moved = set.rep().matrix(m).apply(&dil.omega(s, k, r)[..d]);
                    let target = &dil.omega(s, g.compose(m, k), r)[..d];
                    let diff = moved.iter().zip(target).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
                    covariance = covariance.max(diff);
                }
            }
        }
    }

    let mut statistics: f64 = 0.0;
    for m in g.elements() {
        for r in 0..rr {
            let psi = set.vector(m, r);
            let padded = pad(psi, ex);
            for (k, p) in conclusive.iter().chain(std::iter::once(&failure)).enumerate() {
                let reference = if k < mm { oim.povm.operator(k) } else { oim.povm.failure() };
                statistics = statistics.max((p.expectation(&padded) - reference.expectation(psi)).abs());
            }
        }
    }

    Ok(DilationResiduals {
        onb,
        completeness,
        projective,
        compression,
        isometry_blocks,
        covariance,
        statistics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measurement::{outcome_probs, solve_oim, srm};
    use crate::numerics::{c64, real_vector};
    use crate::symmetry::{AbelianGroup, UnitaryRep};

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn generic() -> AguStateSet {
        let rep = UnitaryRep::regular(AbelianGroup::cyclic(3).unwrap());
        AguStateSet::cyclic_pure(rep.matrix(1), 3, real_vector(&[0.5f64.sqrt(), 0.3f64.sqrt(), 0.2f64.sqrt()]), &tol()).unwrap()
    }

    fn build(set: &AguStateSet, p: f64) -> (OimSolution, ProjectiveDilation) {
        let oim = solve_oim(set, p, &tol()).unwrap();
        let me = srm(set, &tol()).unwrap();
        let dil = build_dilation(set, &oim, &me, &tol()).unwrap();
        (oim, dil)
    }

    #[test]
    fn three_states_dilate_to_six_dimensions() {
        let set = generic();
        let (oim, dil) = build(&set, 0.3);
        assert_eq!(dil.dim_ex(), 6);
        let res = verify_dilation(&dil, &set, &oim).unwrap();
        assert!(res.max() <= 1e-9, "{res:?}");
        assert!(res.completeness <= 1e-10);
        for m in 0..3 {
            for k in 0..3 {
                let omega = dil.conclusive_projector(k);
                let lifted = outcome_probs(&set, &oim.povm).unwrap().get(m, k);
                let direct = crate::measurement::trace_product(&dil.embed(set.state(m)), &omega);
                assert!((lifted - direct).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn minimum_error_endpoint() {
        let set = generic();
        let (oim, dil) = build(&set, 0.0);
        assert!(dil.lambda_op.distance(&ComplexMatrix::identity(3)) < 1e-12);
        let res = verify_dilation(&dil, &set, &oim).unwrap();
        assert!(res.max() <= 1e-9, "{res:?}");
        // Failure projector has no weight on the embedded ℋ.
        assert!(dil.compress(&dil.failure_projector()).max_abs() <= 1e-12);
    }

    #[test]
    fn phase_flip_breaks_covariance() {
        let set = generic();
        let (oim, mut dil) = build(&set, 0.3);
        let i = dil.index(0, 1, 0);
        for z in dil.omega_vectors_mut()[i].iter_mut() {
            *z = -*z;
        }
        let res = verify_dilation(&dil, &set, &oim).unwrap();
        assert!(res.covariance > 0.1);
    }

    #[test]
    fn endpoints_and_unambiguous_regime() {
        let set = generic();
        for p in [1.0, 0.96, 0.6] {
            let (oim, dil) = build(&set, p);
            let res = verify_dilation(&dil, &set, &oim).unwrap();
            assert!(res.max() <= 1e-9, "p={p}: {res:?}");
        }
    }

    #[test]
    fn mixed_set_with_padding() {
        let z2 = AbelianGroup::cyclic(2).unwrap();
        let k4 = z2.product(&z2);
        let rep = UnitaryRep::regular(k4.clone());
        let a = real_vector(&[0.8, 0.3, 0.2, 0.1]);
        let b = vec![c64(0.0, 0.0), c64(0.1, 0.2), c64(0.3, 0.0), c64(0.0, -0.1)];
        let t = (inner(&a, &a).re + inner(&b, &b).re).sqrt();
        let seeds = vec![a, b].into_iter().map(|v| v.into_iter().map(|z| z / t).collect()).collect();
        let set = AguStateSet::new(&k4, rep, seeds, &tol()).unwrap();
        let opts = crate::measurement::OimOptions {
            restarts: 2,
            dominance_samples: 0,
            ..Default::default()
        };
        let oim = crate::measurement::solve_oim_with(&set, 0.25, &opts, &tol()).unwrap();
        let me = srm(&set, &tol()).unwrap();
        let dil = build_dilation(&set, &oim, &me, &tol()).unwrap();
        assert_eq!(dil.dim_ex(), 16);
        let res = verify_dilation(&dil, &set, &oim).unwrap();
        assert!(res.max() <= 1e-9, "{res:?}");
        let probs = outcome_probs(&set, &oim.povm).unwrap();
        assert!((probs.avg_failure() - 0.25).abs() <= 1e-6);
    }

    #[test]
    fn rejects_non_covariant_input() {
        let set = generic();
        let oim = solve_oim(&set, 0.3, &tol()).unwrap();
        let plain = Povm::standard_basis(3);
        assert!(build_dilation(&set, &oim, &plain, &tol()).is_err());
    }
}
