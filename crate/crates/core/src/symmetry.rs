//! Finite Abelian groups, their unitary representations, and the
//! simultaneous eigenbasis of a representation labeled by characters.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numerics::{herm_eigen, ComplexMatrix, Tolerances};

/// Product of cyclic groups `Z_{n_1} × … × Z_{n_t}`.
///
/// Elements are addressed by their index in the lexicographic enumeration of
/// residue tuples, the last factor varying fastest. Index 0 is the identity.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AbelianGroup {
    orders: Vec<usize>,
}

impl AbelianGroup {
    pub fn new(orders: Vec<usize>) -> Result<Self> {
        if orders.is_empty() {
            return Err(Error::InvalidGroup("no cyclic factors given".into()));
        }
        if let Some(&n) = orders.iter().find(|&&n| n < 1) {
            return Err(Error::InvalidGroup(format!("cyclic factor of order {n}")));
        }
        let group = AbelianGroup { orders };
        if group.order() < 2 {
            return Err(Error::InvalidGroup("group must have at least two elements".into()));
        }
        Ok(group)
    }

    pub fn cyclic(m: usize) -> Result<Self> {
        if m < 2 {
            return Err(Error::InvalidGroup(format!("cyclic group of order {m}")));
        }
        Self::new(vec![m])
    }

    /// Direct product `self × other`.
    pub fn product(&self, other: &AbelianGroup) -> AbelianGroup {
        let mut orders = self.orders.clone();
        orders.extend_from_slice(&other.orders);
        AbelianGroup { orders }
    }

    pub fn orders(&self) -> &[usize] {
        &self.orders
    }

    pub fn order(&self) -> usize {
        self.orders.iter().product()
    }

    pub fn identity(&self) -> usize {
        0
    }

    pub fn elements(&self) -> std::ops::Range<usize> {
        0..self.order()
    }

    pub fn to_tuple(&self, m: usize) -> Vec<usize> {
        let mut rem = m;
        let mut out = vec![0; self.orders.len()];
        for (slot, &n) in out.iter_mut().zip(&self.orders).rev() {
            *slot = rem % n;
            rem /= n;
        }
        out
    }

    pub fn from_tuple(&self, tuple: &[usize]) -> Result<usize> {
        if tuple.len() != self.orders.len() || tuple.iter().zip(&self.orders).any(|(&t, &n)| t >= n) {
            return Err(Error::InvalidArgument(format!(
                "{tuple:?} is not an element of {:?}",
                self.orders
            )));
        }
        Ok(tuple.iter().zip(&self.orders).fold(0, |acc, (&t, &n)| acc * n + t))
    }

    /// Group law `m ∘ k`.
    pub fn compose(&self, m: usize, k: usize) -> usize {
        let (mut a, mut b) = (m, k);
        let mut out = 0;
        let mut stride = 1;
        for &n in self.orders.iter().rev() {
            out += ((a % n + b % n) % n) * stride;
            a /= n;
            b /= n;
            stride *= n;
        }
        out
    }

    pub fn inverse(&self, m: usize) -> usize {
        let mut a = m;
        let mut out = 0;
        let mut stride = 1;
        for &n in self.orders.iter().rev() {
            out += ((n - a % n) % n) * stride;
            a /= n;
            stride *= n;
        }
        out
    }

    /// `m ∘ k̄`.
    pub fn difference(&self, m: usize, k: usize) -> usize {
        self.compose(m, self.inverse(k))
    }

    /// Composition of a sequence of elements.
    pub fn compose_all(&self, items: impl IntoIterator<Item = usize>) -> usize {
        items.into_iter().fold(self.identity(), |acc, x| self.compose(acc, x))
    }

    /// Character `χ_j(m) = exp(2πi Σ_i j_i m_i / n_i)`; characters are labeled
    /// by group elements.
    pub fn character(&self, j: usize, m: usize) -> Complex64 {
        let jt = self.to_tuple(j);
        let mt = self.to_tuple(m);
        let phase: f64 = jt
            .iter()
            .zip(&mt)
            .zip(&self.orders)
            .map(|((&a, &b), &n)| ((a * b) % n) as f64 / n as f64)
            .sum();
        Complex64::from_polar(1.0, 2.0 * PI * phase)
    }

    pub fn label(&self, m: usize) -> String {
        if self.orders.len() == 1 {
            m.to_string()
        } else {
            let parts: Vec<String> = self.to_tuple(m).iter().map(|x| x.to_string()).collect();
            format!("({})", parts.join(","))
        }
    }
}

/// Unitary representation `m ↦ U_m` of an Abelian group, stored explicitly.
#[derive(Clone, Debug)]
pub struct UnitaryRep {
    group: AbelianGroup,
    dim: usize,
    matrices: Vec<ComplexMatrix>,
}

impl UnitaryRep {
    /// Validated representation from one matrix per group element.
    pub fn from_matrices(group: AbelianGroup, matrices: Vec<ComplexMatrix>, tol: &Tolerances) -> Result<Self> {
        let rep = Self::from_matrices_unchecked(group, matrices)?;
        let violation = rep.validate();
        if violation > tol.validity {
            return Err(Error::InvalidRep {
                reason: "matrices are not a unitary homomorphism".into(),
                violation,
            });
        }
        Ok(rep)
    }

    /// Shape-checked but otherwise unvalidated representation.
    pub fn from_matrices_unchecked(group: AbelianGroup, matrices: Vec<ComplexMatrix>) -> Result<Self> {
        if matrices.len() != group.order() {
            return Err(Error::InvalidRep {
                reason: format!("{} matrices for a group of order {}", matrices.len(), group.order()),
                violation: f64::INFINITY,
            });
        }
        let dim = matrices[0].rows();
        if matrices.iter().any(|u| u.rows() != dim || u.cols() != dim) {
            return Err(Error::InvalidRep {
                reason: "matrices must be square and of equal size".into(),
                violation: f64::INFINITY,
            });
        }
        Ok(UnitaryRep { group, dim, matrices })
    }

    /// `U_m = Π_i V_i^{m_i}`, one generator per cyclic factor.
    pub fn from_generators(group: AbelianGroup, generators: &[ComplexMatrix], tol: &Tolerances) -> Result<Self> {
        if generators.len() != group.orders().len() {
            return Err(Error::InvalidRep {
                reason: format!("{} generators for {} cyclic factors", generators.len(), group.orders().len()),
                violation: f64::INFINITY,
            });
        }
        let dim = generators[0].rows();
        if generators.iter().any(|g| g.rows() != dim || g.cols() != dim) {
            return Err(Error::InvalidRep {
                reason: "generators must be square and of equal size".into(),
                violation: f64::INFINITY,
            });
        }
        for (g, &n) in generators.iter().zip(group.orders()) {
            let power = matrix_power(g, n);
            let violation = power.distance(&ComplexMatrix::identity(dim));
            if violation > tol.validity {
                return Err(Error::InvalidRep {
                    reason: format!("generator does not satisfy V^{n} = I"),
                    violation,
                });
            }
        }
        let matrices = group
            .elements()
            .map(|m| {
                group
                    .to_tuple(m)
                    .iter()
                    .zip(generators)
                    .fold(ComplexMatrix::identity(dim), |acc, (&e, g)| &acc * &matrix_power(g, e))
            })
            .collect();
        Self::from_matrices(group, matrices, tol)
    }

    /// Cyclic representation `U_m = V^m` of `Z_M`.
    pub fn from_generator(v: &ComplexMatrix, m: usize, tol: &Tolerances) -> Result<Self> {
        let group = AbelianGroup::cyclic(m)?;
        Self::from_generators(group, std::slice::from_ref(v), tol)
    }

    /// Regular representation: `U_m e_k = e_{m∘k}` (the cyclic shift for `Z_M`).
    pub fn regular(group: AbelianGroup) -> Self {
        let n = group.order();
        let matrices = group
            .elements()
            .map(|m| {
                let mut u = ComplexMatrix::zeros(n, n);
                for k in 0..n {
                    u[(group.compose(m, k), k)] = Complex64::new(1.0, 0.0);
                }
                u
            })
            .collect();
        UnitaryRep {
            dim: n,
            group,
            matrices,
        }
    }

    /// Diagonal representation carrying every character once:
    /// `U_m = diag(χ_0(m), …, χ_{M-1}(m))`.
    pub fn diagonal_characters(group: AbelianGroup) -> Self {
        let n = group.order();
        let matrices = group
            .elements()
            .map(|m| {
                let diag: Vec<Complex64> = group.elements().map(|j| group.character(j, m)).collect();
                ComplexMatrix::from_diagonal(&diag)
            })
            .collect();
        UnitaryRep {
            dim: n,
            group,
            matrices,
        }
    }

    pub fn group(&self) -> &AbelianGroup {
        &self.group
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self, m: usize) -> &ComplexMatrix {
        &self.matrices[m]
    }

    pub fn matrices(&self) -> &[ComplexMatrix] {
        &self.matrices
    }

    /// `U_m X U_m†`.
    pub fn conjugate(&self, m: usize, x: &ComplexMatrix) -> ComplexMatrix {
        let u = &self.matrices[m];
        &(u * x) * &u.adjoint()
    }

    /// Largest of `‖U_m U_k − U_{m∘k}‖_F`, `‖U_m† U_m − I‖_F` and `‖U_e − I‖_F`.
    pub fn validate(&self) -> f64 {
        let g = &self.group;
        let id = ComplexMatrix::identity(self.dim);
        let mut worst = self.matrices[g.identity()].distance(&id);
        for m in g.elements() {
            worst = worst.max(self.matrices[m].isometry_violation());
            for k in g.elements() {
                let prod = &self.matrices[m] * &self.matrices[k];
                worst = worst.max(prod.distance(&self.matrices[g.compose(m, k)]));
            }
        }
        worst
    }

    /// Simultaneous eigenbasis of all `U_m`, grouped by character.
    pub fn character_basis(&self, tol: &Tolerances) -> Result<CharacterBasis> {
        let violation = self.validate();
        if violation > tol.validity {
            return Err(Error::InvalidRep {
                reason: "cannot diagonalize an invalid representation".into(),
                violation,
            });
        }
        let g = &self.group;
        let weight = 1.0 / g.order() as f64;
        let mut vectors = Vec::new();
        let mut labels = Vec::new();
        let mut blocks = Vec::new();
        for j in g.elements() {
            // Isotypic projector (1/M) Σ_m χ_j(m)* U_m.
            let mut proj = ComplexMatrix::zeros(self.dim, self.dim);
            for m in g.elements() {
                proj = &proj + &self.matrices[m].scale(g.character(j, m).conj() * weight);
            }
            let proj = proj.hermitian_part();
            let eig = herm_eigen(&proj, tol.validity)?;
            let start = vectors.len();
            for (k, &value) in eig.values.iter().enumerate() {
                if value > 0.5 {
                    vectors.push(eig.vector(k));
                    labels.push(j);
                }
            }
            if vectors.len() > start {
                blocks.push(CharacterBlock {
                    character: j,
                    start,
                    len: vectors.len() - start,
                });
            }
        }
        if vectors.len() != self.dim {
            return Err(Error::InvalidRep {
                reason: format!("character decomposition found {} of {} dimensions", vectors.len(), self.dim),
                violation: (self.dim as f64 - vectors.len() as f64).abs(),
            });
        }
        Ok(CharacterBasis {
            vectors,
            labels,
            blocks,
        })
    }
}

fn matrix_power(m: &ComplexMatrix, e: usize) -> ComplexMatrix {
    (0..e).fold(ComplexMatrix::identity(m.rows()), |acc, _| &acc * m)
}

/// Contiguous run of basis vectors sharing one character.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CharacterBlock {
    pub character: usize,
    pub start: usize,
    pub len: usize,
}

#[derive(Clone, Debug)]
pub struct CharacterBasis {
    pub vectors: Vec<Vec<Complex64>>,
    /// Character label (a group element) of each vector.
    pub labels: Vec<usize>,
    pub blocks: Vec<CharacterBlock>,
}

impl CharacterBasis {
    /// True when no character occurs more than once.
    pub fn is_multiplicity_free(&self) -> bool {
        self.blocks.iter().all(|b| b.len == 1)
    }

    /// Columns are the basis vectors.
    pub fn matrix(&self) -> ComplexMatrix {
        ComplexMatrix::from_columns(&self.vectors).expect("basis is non-empty")
    }

    pub fn block_vectors(&self, block: &CharacterBlock) -> &[Vec<Complex64>] {
        &self.vectors[block.start..block.start + block.len]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{gram_violation, inner, norm};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn shift3() -> ComplexMatrix {
        // e0 -> e1 -> e2 -> e0
        let mut v = ComplexMatrix::zeros(3, 3);
        v[(1, 0)] = c(1., 0.);
        v[(2, 1)] = c(1., 0.);
        v[(0, 2)] = c(1., 0.);
        v
    }

    fn omega() -> Complex64 {
        Complex64::from_polar(1.0, 2.0 * PI / 3.0)
    }

    #[test]
    fn cyclic_group_law() {
        let g = AbelianGroup::cyclic(3).unwrap();
        assert_eq!(g.compose(1, 2), 0);
        assert_eq!(g.inverse(g.identity()), g.identity());
        assert_eq!(g.inverse(1), 2);
        assert!(AbelianGroup::cyclic(1).is_err());
        assert!(AbelianGroup::new(vec![]).is_err());
    }

    #[test]
    fn klein_four_group() {
        let z2 = AbelianGroup::cyclic(2).unwrap();
        let k = z2.product(&z2);
        assert_eq!(k.order(), 4);
        let a = k.from_tuple(&[1, 0]).unwrap();
        let b = k.from_tuple(&[1, 1]).unwrap();
        assert_eq!(k.to_tuple(k.compose(a, b)), vec![0, 1]);
        for m in k.elements() {
            assert_eq!(k.compose(m, m), k.identity());
            assert_eq!(k.from_tuple(&k.to_tuple(m)).unwrap(), m);
        }
        assert!(k.from_tuple(&[2, 0]).is_err());
    }

    #[test]
    fn characters_are_homomorphisms() {
        let g = AbelianGroup::new(vec![2, 3]).unwrap();
        for j in g.elements() {
            for m in g.elements() {
                for k in g.elements() {
                    let lhs = g.character(j, g.compose(m, k));
                    let rhs = g.character(j, m) * g.character(j, k);
                    assert!((lhs - rhs).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn generator_reps() {
        let tol = Tolerances::default();
        let trivial = UnitaryRep::from_generator(&ComplexMatrix::identity(2), 3, &tol).unwrap();
        assert!(trivial.matrices().iter().all(|u| *u == ComplexMatrix::identity(2)));
        assert_eq!(trivial.validate(), 0.0);

        let shift = UnitaryRep::from_generator(&shift3(), 3, &tol).unwrap();
        assert!((shift.matrix(1) * shift.matrix(2)).distance(&ComplexMatrix::identity(3)) < 1e-15);
        assert!(shift.validate() <= 1e-12);

        let diag = ComplexMatrix::from_diagonal(&[c(1., 0.), omega(), omega() * omega()]);
        let rep = UnitaryRep::from_generator(&diag, 3, &tol).unwrap();
        assert!(rep.validate() <= 1e-12);

        let err = UnitaryRep::from_generator(&shift3(), 2, &tol).unwrap_err();
        assert!(matches!(err, Error::InvalidRep { .. }));
    }

    #[test]
    fn regular_rep_of_z3_is_the_shift() {
        let rep = UnitaryRep::regular(AbelianGroup::cyclic(3).unwrap());
        assert_eq!(*rep.matrix(1), shift3());
    }

    #[test]
    fn validate_detects_perturbation() {
        let rep = UnitaryRep::regular(AbelianGroup::cyclic(3).unwrap());
        let mut mats = rep.matrices().to_vec();
        mats[1][(0, 0)] += c(1e-3, 0.0);
        let bad = UnitaryRep::from_matrices_unchecked(rep.group().clone(), mats.clone()).unwrap();
        assert!(bad.validate() >= 1e-3);
        assert!(UnitaryRep::from_matrices(rep.group().clone(), mats, &Tolerances::default()).is_err());
    }

    #[test]
    fn inverse_pairs_multiply_to_identity() {
        let g = AbelianGroup::new(vec![2, 2]).unwrap();
        let rep = UnitaryRep::regular(g.clone());
        for m in g.elements() {
            let p = rep.matrix(m) * rep.matrix(g.inverse(m));
            assert!(p.distance(&ComplexMatrix::identity(4)) <= 1e-10);
        }
    }

    #[test]
    fn character_basis_of_diagonal_rep_is_standard() {
        let g = AbelianGroup::cyclic(3).unwrap();
        let rep = UnitaryRep::diagonal_characters(g.clone());
        let basis = rep.character_basis(&Tolerances::default()).unwrap();
        assert!(basis.is_multiplicity_free());
        assert_eq!(basis.labels, vec![0, 1, 2]);
        for (k, v) in basis.vectors.iter().enumerate() {
            assert!((v[k] - c(1., 0.)).norm() < 1e-12);
            assert!((norm(v) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn character_basis_of_shift_is_fourier() {
        let g = AbelianGroup::cyclic(3).unwrap();
        let rep = UnitaryRep::regular(g.clone());
        let basis = rep.character_basis(&Tolerances::default()).unwrap();
        assert!(gram_violation(&basis.vectors) < 1e-12);
        for (v, &label) in basis.vectors.iter().zip(&basis.labels) {
            // Fourier vector f_k[j] = ω^{jk}/√3 up to phase, with V f_k = ω^{-k} f_k
            let k = (3 - label) % 3;
            let f: Vec<Complex64> = (0..3)
                .map(|j| Complex64::from_polar(1.0 / 3f64.sqrt(), 2.0 * PI * (j * k) as f64 / 3.0))
                .collect();
            assert!((inner(&f, v).norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn character_basis_diagonalizes_every_element() {
        let tol = Tolerances::default();
        for orders in [vec![3], vec![4], vec![2, 2], vec![2, 3]] {
            let g = AbelianGroup::new(orders).unwrap();
            let rep = UnitaryRep::regular(g.clone());
            let basis = rep.character_basis(&tol).unwrap();
            assert!(gram_violation(&basis.vectors) < 1e-12);
            let mut distinct = basis.labels.clone();
            distinct.dedup();
            assert_eq!(distinct.len(), basis.blocks.len());
            for (v, &label) in basis.vectors.iter().zip(&basis.labels) {
                for m in g.elements() {
                    let uv = rep.matrix(m).apply(v);
                    let chi = g.character(label, m);
                    let diff: Vec<Complex64> = uv.iter().zip(v).map(|(a, b)| a - chi * b).collect();
                    assert!(norm(&diff) <= 1e-10);
                }
            }
        }
    }

    #[test]
    fn character_basis_reports_multiplicities() {
        let g = AbelianGroup::cyclic(2).unwrap();
        let diag = ComplexMatrix::from_real_diagonal(&[1.0, 1.0, -1.0]);
        let rep = UnitaryRep::from_generator(&diag, 2, &Tolerances::default()).unwrap();
        let basis = rep.character_basis(&Tolerances::default()).unwrap();
        assert!(!basis.is_multiplicity_free());
        assert_eq!(basis.blocks.len(), 2);
        assert_eq!(basis.blocks[0], CharacterBlock { character: 0, start: 0, len: 2 });
        assert_eq!(g.order(), 2);
    }
}
