//! Equiprobable state sets generated by an Abelian group representation.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numerics::{herm_eigen, inner, ComplexMatrix, Tolerances};
use crate::symmetry::{AbelianGroup, CharacterBasis, UnitaryRep};

/// Unit-trace tolerance on the seed state.
pub const TRACE_TOLERANCE: f64 = 1e-10;
/// Eigenvalue cutoff used for rank and independence decisions.
pub const RANK_CUTOFF: f64 = 1e-10;

/// States `ρ_m = Σ_r |ψ_{m,r}⟩⟨ψ_{m,r}|` with `ψ_{m,r} = U_m ψ_{e,r}` and
/// priors `1/M`.
#[derive(Clone, Debug)]
pub struct AguStateSet {
    rep: UnitaryRep,
    seeds: Vec<Vec<Complex64>>,
    vectors: Vec<Vec<Vec<Complex64>>>,
    states: Vec<ComplexMatrix>,
    linearly_independent: bool,
    spans_space: bool,
}

impl AguStateSet {
    /// Builds the set from `R` seed vectors whose outer products sum to a
    /// unit-trace `ρ_e`.
    pub fn new(group: &AbelianGroup, rep: UnitaryRep, seeds: Vec<Vec<Complex64>>, tol: &Tolerances) -> Result<Self> {
        if rep.group() != group {
            return Err(Error::InvalidStates("representation belongs to a different group".into()));
        }
        let violation = rep.validate();
        if violation > tol.validity {
            return Err(Error::InvalidRep {
                reason: "state set needs a valid representation".into(),
                violation,
            });
        }
        if seeds.is_empty() {
            return Err(Error::InvalidStates("no seed vectors".into()));
        }
        let d = rep.dim();
        if let Some(s) = seeds.iter().find(|s| s.len() != d) {
            return Err(Error::Dimension(format!(
                "seed vector of length {} for a representation of dimension {d}",
                s.len()
            )));
        }
        let trace: f64 = seeds.iter().map(|s| inner(s, s).re).sum();
        if (trace - 1.0).abs() > TRACE_TOLERANCE {
            return Err(Error::InvalidStates(format!("seed state has trace {trace}, expected 1")));
        }
        if min_gram_eigenvalue(&seeds)? <= RANK_CUTOFF {
            return Err(Error::InvalidStates("seed vectors are linearly dependent".into()));
        }

        let vectors: Vec<Vec<Vec<Complex64>>> = group
            .elements()
            .map(|m| seeds.iter().map(|s| rep.matrix(m).apply(s)).collect())
            .collect();
        let states: Vec<ComplexMatrix> = vectors
            .iter()
            .map(|vs| {
                vs.iter()
                    .fold(ComplexMatrix::zeros(d, d), |acc, v| &acc + &ComplexMatrix::projector(v))
            })
            .collect();

        let all: Vec<Vec<Complex64>> = vectors.iter().flatten().cloned().collect();
        let linearly_independent = all.len() <= d && min_gram_eigenvalue(&all)? > RANK_CUTOFF;
        let total = states.iter().fold(ComplexMatrix::zeros(d, d), |acc, s| &acc + s);
        let spans_space = herm_eigen(&total, tol.internal)?.values.iter().all(|&x| x > RANK_CUTOFF);

        Ok(AguStateSet {
            rep,
            seeds,
            vectors,
            states,
            linearly_independent,
            spans_space,
        })
    }

    /// Pure cyclic set `ψ_m = V^m ψ_0` over `Z_M`.
    pub fn cyclic_pure(v: &ComplexMatrix, m: usize, psi0: Vec<Complex64>, tol: &Tolerances) -> Result<Self> {
        let n = inner(&psi0, &psi0).re;
        if (n - 1.0).abs() > TRACE_TOLERANCE {
            return Err(Error::InvalidStates(format!("seed vector has squared norm {n}, expected 1")));
        }
        let rep = UnitaryRep::from_generator(v, m, tol)?;
        let group = rep.group().clone();
        Self::new(&group, rep, vec![psi0], tol)
    }

    pub fn group(&self) -> &AbelianGroup {
        self.rep.group()
    }

    pub fn rep(&self) -> &UnitaryRep {
        &self.rep
    }

    /// Number of states `M`.
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Rank `R` of each state.
    pub fn rank(&self) -> usize {
        self.seeds.len()
    }

    /// Ambient dimension `D`.
    pub fn dim(&self) -> usize {
        self.rep.dim()
    }

    pub fn prior(&self) -> f64 {
        1.0 / self.len() as f64
    }

    pub fn is_pure(&self) -> bool {
        self.rank() == 1
    }

    pub fn is_linearly_independent(&self) -> bool {
        self.linearly_independent
    }

    /// Whether the states span the representation space.
    pub fn spans_space(&self) -> bool {
        self.spans_space
    }

    pub fn seeds(&self) -> &[Vec<Complex64>] {
        &self.seeds
    }

    pub fn state(&self, m: usize) -> &ComplexMatrix {
        &self.states[m]
    }

    pub fn states(&self) -> &[ComplexMatrix] {
        &self.states
    }

    /// `ψ_{m,r}`.
    pub fn vector(&self, m: usize, r: usize) -> &[Complex64] {
        &self.vectors[m][r]
    }

    pub fn vectors(&self, m: usize) -> &[Vec<Complex64>] {
        &self.vectors[m]
    }

    /// `S = Σ_{m,r} |ψ_{m,r}⟩⟨ψ_{m,r}|`.
    pub fn frame_operator(&self) -> ComplexMatrix {
        let d = self.dim();
        self.states.iter().fold(ComplexMatrix::zeros(d, d), |acc, s| &acc + s)
    }

    /// `max_{m,k} ‖ρ_{m∘k} − U_m ρ_k U_m†‖_F`.
    pub fn covariance_violation(&self) -> f64 {
        let g = self.group();
        let mut worst: f64 = 0.0;
        for m in g.elements() {
            for k in g.elements() {
                let moved = self.rep.conjugate(m, &self.states[k]);
                worst = worst.max(moved.distance(&self.states[g.compose(m, k)]));
            }
        }
        worst
    }

    /// Gram matrix `G[j,k] = ⟨ψ_j|ψ_k⟩` of a pure set.
    pub fn gram(&self) -> Result<ComplexMatrix> {
        if !self.is_pure() {
            return Err(Error::InvalidStates(format!("Gram matrix requested for a rank-{} set", self.rank())));
        }
        let n = self.len();
        Ok(ComplexMatrix::from_fn(n, n, |j, k| inner(&self.vectors[j][0], &self.vectors[k][0])))
    }

    /// Coefficients `⟨f|ψ_{e,r}⟩` of every seed in the character basis;
    /// indexed `[basis vector][r]`.
    pub fn character_coefficients(&self, basis: &CharacterBasis) -> Vec<Vec<Complex64>> {
        basis
            .vectors
            .iter()
            .map(|f| self.seeds.iter().map(|s| inner(f, s)).collect())
            .collect()
    }
}

fn min_gram_eigenvalue(vectors: &[Vec<Complex64>]) -> Result<f64> {
    let n = vectors.len();
    let gram = ComplexMatrix::from_fn(n, n, |i, j| inner(&vectors[i], &vectors[j]));
    Ok(herm_eigen(&gram, 1e-9)?.values.last().copied().unwrap_or(0.0))
}
