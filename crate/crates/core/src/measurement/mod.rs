//! Measurements with outcomes `𝒢 ∪ {?}`: validation, statistics, minimum-error
//! and optimal inconclusive measurements.

mod conic;
mod me;
mod oim;
mod search;
mod unambiguous;

pub use me::{check_me_optimality, minimum_error, srm, MeMethod, MeResult, ME_CERTIFICATE_TOLERANCE};
pub use oim::{
    filtered_srm, solve_oim, solve_oim_with, unamb_threshold, OimCertificate, OimMethod, OimOptions, OimSolution,
};
pub use search::{dominance_check, random_povm_at_failure, DominanceReport};

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::{herm_eigen, ComplexMatrix};
use crate::states::AguStateSet;
use crate::symmetry::UnitaryRep;

/// Detection operators `Π_m` (indexed by group element) and `Π_?`.
#[derive(Clone, Debug)]
pub struct Povm {
    conclusive: Vec<ComplexMatrix>,
    failure: ComplexMatrix,
    vectors: Option<Vec<Vec<Vec<Complex64>>>>,
    covariant: bool,
}

impl Povm {
    pub fn new(conclusive: Vec<ComplexMatrix>, failure: ComplexMatrix) -> Result<Self> {
        let d = failure.rows();
        if !failure.is_square() || conclusive.iter().any(|p| p.rows() != d || p.cols() != d) {
            return Err(Error::Dimension("POVM operators must be square and of equal size".into()));
        }
        if conclusive.is_empty() {
            return Err(Error::InvalidPovm("no conclusive outcomes".into()));
        }
        Ok(Povm {
            conclusive,
            failure,
            vectors: None,
            covariant: false,
        })
    }

    /// `Π_m = Σ_r |π_{m,r}⟩⟨π_{m,r}|`, vectors indexed `[m][r]`.
    pub fn from_vectors(vectors: Vec<Vec<Vec<Complex64>>>, failure: ComplexMatrix) -> Result<Self> {
        let d = failure.rows();
        if vectors.iter().flatten().any(|v| v.len() != d) {
            return Err(Error::Dimension("detection vectors do not match the failure operator".into()));
        }
        let conclusive = vectors
            .iter()
            .map(|vs| {
                vs.iter()
                    .fold(ComplexMatrix::zeros(d, d), |acc, v| &acc + &ComplexMatrix::projector(v))
            })
            .collect();
        let mut povm = Self::new(conclusive, failure)?;
        povm.vectors = Some(vectors);
        Ok(povm)
    }

    /// Marks the measurement as covariant; `validate_povm` then checks it.
    pub fn covariant(mut self) -> Self {
        self.covariant = true;
        self
    }

    pub fn is_covariant(&self) -> bool {
        self.covariant
    }

    pub fn dim(&self) -> usize {
        self.failure.rows()
    }

    /// Number of conclusive outcomes.
    pub fn len(&self) -> usize {
        self.conclusive.len()
    }

    pub fn is_empty(&self) -> bool {
        self.conclusive.is_empty()
    }

    pub fn operator(&self, m: usize) -> &ComplexMatrix {
        &self.conclusive[m]
    }

    pub fn conclusive(&self) -> &[ComplexMatrix] {
        &self.conclusive
    }

    pub fn failure(&self) -> &ComplexMatrix {
        &self.failure
    }

    pub fn vectors(&self) -> Option<&[Vec<Vec<Complex64>>]> {
        self.vectors.as_deref()
    }

    /// `Σ_m Π_m + Π_?`.
    pub fn total(&self) -> ComplexMatrix {
        self.conclusive.iter().fold(self.failure.clone(), |acc, p| &acc + p)
    }

    /// Projective measurement onto the standard basis, outcome `m` on `e_m`.
    pub fn standard_basis(dim: usize) -> Self {
        let ops = (0..dim)
            .map(|m| {
                let mut p = ComplexMatrix::zeros(dim, dim);
                p[(m, m)] = Complex64::new(1.0, 0.0);
                p
            })
            .collect();
        Self::new(ops, ComplexMatrix::zeros(dim, dim)).expect("dim > 0")
    }

    /// `Π_? = I`, every conclusive operator zero.
    pub fn always_fail(dim: usize, outcomes: usize) -> Self {
        Self::new(vec![ComplexMatrix::zeros(dim, dim); outcomes], ComplexMatrix::identity(dim))
            .expect("outcomes > 0")
            .covariant()
    }
}

/// Largest of the completeness, positivity and (for covariant measurements
/// when a representation is supplied) covariance violations.
pub fn validate_povm(povm: &Povm, rep: Option<&UnitaryRep>) -> f64 {
    let d = povm.dim();
    let mut worst = povm.total().distance(&ComplexMatrix::identity(d));
    for op in povm.conclusive.iter().chain(std::iter::once(&povm.failure)) {
        worst = worst.max(op.hermitian_violation());
        match herm_eigen(op, f64::INFINITY) {
            Ok(eig) => worst = worst.max(-eig.values.last().copied().unwrap_or(0.0)),
            Err(_) => return f64::INFINITY,
        }
    }
    if let Some(rep) = rep.filter(|_| povm.covariant) {
        if rep.dim() != d || rep.group().order() != povm.len() {
            return f64::INFINITY;
        }
        let g = rep.group();
        for m in g.elements() {
            worst = worst.max(rep.conjugate(m, &povm.failure).distance(&povm.failure));
            for k in g.elements() {
                let moved = rep.conjugate(m, &povm.conclusive[k]);
                worst = worst.max(moved.distance(&povm.conclusive[g.compose(m, k)]));
            }
        }
    }
    worst
}

/// `P[k|m] = Tr(ρ_m Π_k)`; the last column is the failure outcome.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProbTable {
    rows: Vec<Vec<f64>>,
}

impl ProbTable {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Self {
        ProbTable { rows }
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn messages(&self) -> usize {
        self.rows.len()
    }

    pub fn get(&self, m: usize, k: usize) -> f64 {
        self.rows[m][k]
    }

    pub fn failure(&self, m: usize) -> f64 {
        *self.rows[m].last().expect("rows are non-empty")
    }

    /// `(1/M) Σ_m P[m|m]`.
    pub fn avg_correct(&self) -> f64 {
        let n = self.rows.len() as f64;
        self.rows.iter().enumerate().map(|(m, r)| r[m]).sum::<f64>() / n
    }

    /// `(1/M) Σ_m P[?|m]`.
    pub fn avg_failure(&self) -> f64 {
        let n = self.rows.len() as f64;
        (0..self.rows.len()).map(|m| self.failure(m)).sum::<f64>() / n
    }

    /// Largest `P[k|m]` over conclusive `k ≠ m`.
    pub fn max_error(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (m, r) in self.rows.iter().enumerate() {
            for (k, &x) in r[..r.len() - 1].iter().enumerate() {
                if k != m {
                    worst = worst.max(x);
                }
            }
        }
        worst
    }

    /// Largest entrywise difference.
    pub fn distance(&self, other: &ProbTable) -> f64 {
        self.rows
            .iter()
            .zip(&other.rows)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max)
    }
}

pub fn outcome_probs(set: &AguStateSet, povm: &Povm) -> Result<ProbTable> {
    if povm.dim() != set.dim() {
        return Err(Error::Dimension(format!(
            "POVM acts on dimension {} but the states live in dimension {}",
            povm.dim(),
            set.dim()
        )));
    }
    let rows = set
        .states()
        .iter()
        .map(|rho| {
            povm.conclusive
                .iter()
                .chain(std::iter::once(&povm.failure))
                .map(|op| clamp_prob(trace_product(rho, op)))
                .collect()
        })
        .collect();
    Ok(ProbTable { rows })
}

pub fn avg_correct(set: &AguStateSet, povm: &Povm) -> Result<f64> {
    Ok(outcome_probs(set, povm)?.avg_correct())
}

pub fn avg_failure(set: &AguStateSet, povm: &Povm) -> Result<f64> {
    Ok(outcome_probs(set, povm)?.avg_failure())
}

/// `π_{m,r} = U_m T ψ_{e,r}`, covariant by construction.
pub(crate) fn covariant_vectors(set: &AguStateSet, t: &ComplexMatrix) -> Vec<Vec<Vec<Complex64>>> {
    let base: Vec<Vec<Complex64>> = set.seeds().iter().map(|s| t.apply(s)).collect();
    set.group()
        .elements()
        .map(|m| base.iter().map(|v| set.rep().matrix(m).apply(v)).collect())
        .collect()
}

/// `Re Tr(AB)` without forming the product.
pub fn trace_product(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    let n = a.rows();
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            acc += a[(i, j)] * b[(j, i)];
        }
    }
    acc.re
}

pub(crate) fn clamp_prob(x: f64) -> f64 {
    if (-1e-10..0.0).contains(&x) {
        0.0
    } else {
        x
    }
}
