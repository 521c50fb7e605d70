//! Preprocessing maps that hide the message from every proper subset of
//! observers, the product-basis receiver measurement and the exact checks.
//!
//! Local labels: observer `n` holds `C^{2MR}` with basis vectors
//! `μ^{(s)}_{t,r}` in column `(s·M + t)·R + r` of its local unitary. The
//! composite orders observers ascending, observer 0 most significant.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dilation::ProjectiveDilation;
use crate::error::{Error, Result};
use crate::measurement::{trace_product, Povm};
use crate::numerics::{apply_on_factor, gram_violation, kron_vec, ComplexMatrix, MAX_ENTRIES};
use crate::states::AguStateSet;
use crate::symmetry::AbelianGroup;

pub const DEFAULT_DIMENSION_CAP: usize = 4096;

const BASIS_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MapKind {
    Entangled,
    Separable,
}

#[derive(Clone, Debug)]
pub struct PreprocessMap {
    kind: MapKind,
    group: AbelianGroup,
    rank: usize,
    n_observers: usize,
    kraus: Vec<ComplexMatrix>,
    local_bases: Vec<ComplexMatrix>,
}

impl PreprocessMap {
    pub fn kind(&self) -> MapKind {
        self.kind
    }

    pub fn group(&self) -> &AbelianGroup {
        &self.group
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn n_observers(&self) -> usize {
        self.n_observers
    }

    /// `2MR`.
    pub fn local_dim(&self) -> usize {
        2 * self.group.order() * self.rank
    }

    pub fn composite_dim(&self) -> usize {
        self.local_dim().pow(self.n_observers as u32)
    }

    pub fn dims(&self) -> Vec<usize> {
        vec![self.local_dim(); self.n_observers]
    }

    pub fn kraus(&self) -> &[ComplexMatrix] {
        &self.kraus
    }

    pub fn local_bases(&self) -> &[ComplexMatrix] {
        &self.local_bases
    }

    /// `‖Σ K†K − I‖_F`.
    pub fn trace_preservation_violation(&self) -> f64 {
        let n = self.local_dim();
        let total = self
            .kraus
            .iter()
            .fold(ComplexMatrix::zeros(n, n), |acc, k| &acc + &(&k.adjoint() * k));
        total.distance(&ComplexMatrix::identity(n))
    }
}

/// `ρ = Σ_i |v_i⟩⟨v_i|` on a composite of `dims`.
#[derive(Clone, Debug)]
pub struct CompositeState {
    dims: Vec<usize>,
    vectors: Vec<Vec<Complex64>>,
}

impl CompositeState {
    pub fn new(dims: Vec<usize>, vectors: Vec<Vec<Complex64>>) -> Result<Self> {
        let d: usize = dims.iter().product();
        if vectors.iter().any(|v| v.len() != d) {
            return Err(Error::Dimension(format!("state vectors must have length {d}")));
        }
        Ok(CompositeState { dims, vectors })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn vectors(&self) -> &[Vec<Complex64>] {
        &self.vectors
    }

    pub fn trace(&self) -> f64 {
        self.vectors.iter().flatten().map(|z| z.norm_sqr()).sum()
    }

    pub fn matrix(&self) -> Result<ComplexMatrix> {
        self.reduced(&(0..self.dims.len()).collect::<Vec<_>>())
    }

    /// Reduced state on the subsystems in `keep` (ascending).
    pub fn reduced(&self, keep: &[usize]) -> Result<ComplexMatrix> {
        if keep.windows(2).any(|w| w[0] >= w[1]) || keep.iter().any(|&k| k >= self.dims.len()) {
            return Err(Error::InvalidArgument(format!("invalid subsystem list {keep:?}")));
        }
        let dk: usize = keep.iter().map(|&k| self.dims[k]).product();
        if dk.checked_mul(dk).is_none_or(|n| n > MAX_ENTRIES) {
            return Err(Error::Overflow { rows: dk, cols: dk, max: MAX_ENTRIES });
        }
        let total = self.dim();
        let dc = total / dk;
        let mut split = Vec::with_capacity(total);
        for i in 0..total {
            let mut rest = i;
            let mut digits = vec![0; self.dims.len()];
            for (n, &d) in self.dims.iter().enumerate().rev() {
                digits[n] = rest % d;
                rest /= d;
            }
            let (mut ki, mut ci) = (0, 0);
            for (n, &d) in self.dims.iter().enumerate() {
                if keep.contains(&n) {
                    ki = ki * d + digits[n];
                } else {
                    ci = ci * d + digits[n];
                }
            }
            split.push((ki, ci));
        }
        let mut out = ComplexMatrix::zeros(dk, dk);
        let mut w = vec![Complex64::new(0.0, 0.0); total];
        for v in &self.vectors {
            for (i, &(ki, ci)) in split.iter().enumerate() {
                w[ki * dc + ci] = v[i];
            }
            for a in 0..dk {
                let row_a = &w[a * dc..(a + 1) * dc];
                for b in a..dk {
                    let row_b = &w[b * dc..(b + 1) * dc];
                    let x: Complex64 = row_a.iter().zip(row_b).map(|(p, q)| p * q.conj()).sum();
                    out[(a, b)] += x;
                    if a != b {
                        out[(b, a)] += x.conj();
                    }
                }
            }
        }
        Ok(out)
    }

    /// Outcome distribution of measuring every factor in its local basis.
    pub fn product_distribution(&self, bases: &[ComplexMatrix]) -> Result<Vec<f64>> {
        if bases.len() != self.dims.len() {
            return Err(Error::Dimension("one local basis per subsystem is required".into()));
        }
        let adjoints: Vec<ComplexMatrix> = bases.iter().map(|b| b.adjoint()).collect();
        let mut probs = vec![0.0; self.dim()];
        for v in &self.vectors {
            let mut w = ComplexMatrix::new(v.len(), 1, v.clone())?;
            for (n, b) in adjoints.iter().enumerate() {
                w = apply_on_factor(&w, &self.dims, n, b)?;
            }
            for (p, z) in probs.iter_mut().zip(w.data()) {
                *p += z.norm_sqr();
            }
        }
        Ok(probs)
    }
}

fn check_dilation(dil: &ProjectiveDilation) -> Result<()> {
    let violation = gram_violation(dil.omega_vectors());
    if dil.omega_vectors().len() != dil.dim_ex() || violation > BASIS_TOLERANCE {
        return Err(Error::InvalidArgument(format!(
            "dilation basis is not orthonormal (violation {violation:.3e})"
        )));
    }
    Ok(())
}

/// Identity local bases for `n` observers.
pub fn standard_bases(dil: &ProjectiveDilation, n: usize) -> Vec<ComplexMatrix> {
    vec![ComplexMatrix::identity(dil.dim_ex()); n]
}

fn check_bases(bases: &[ComplexMatrix], n: usize, local: usize) -> Result<()> {
    if bases.len() != n {
        return Err(Error::Dimension(format!("{} local bases for {n} observers", bases.len())));
    }
    for b in bases {
        if b.rows() != local || b.cols() != local {
            return Err(Error::Dimension(format!("local bases must be {local}x{local}")));
        }
        let violation = b.isometry_violation();
        if violation > BASIS_TOLERANCE {
            return Err(Error::NotOrthonormal { violation });
        }
    }
    Ok(())
}

fn check_cap(local: usize, n: usize, cap: usize) -> Result<usize> {
    let dim = u32::try_from(n)
        .ok()
        .and_then(|e| local.checked_pow(e))
        .ok_or(Error::DimensionCap { dim: usize::MAX, cap })?;
    if dim > cap {
        return Err(Error::DimensionCap { dim, cap });
    }
    Ok(dim)
}

fn mu(bases: &[ComplexMatrix], n: usize, m: usize, rank: usize, s: usize, t: usize, r: usize) -> Vec<Complex64> {
    bases[n].column((s * m + t) * rank + r)
}

fn inverse_scale(v: &mut [Complex64], c: f64) {
    for z in v {
        *z /= c;
    }
}

pub fn build_bipartite_entangled(dil: &ProjectiveDilation) -> Result<PreprocessMap> {
    build_bipartite_entangled_with(dil, standard_bases(dil, 2))
}

/// `A = Σ |η^{(q)}_{k,r}⟩⟨ω^{(q)}_{k,r}|` with
/// `η^{(q)}_{k,r} = (2M)^{-1/2} Σ_{s,t} a^{(s)}_{t,r} ⊗ b^{(q⊕s)}_{t̄∘k,r}`.
pub fn build_bipartite_entangled_with(dil: &ProjectiveDilation, bases: Vec<ComplexMatrix>) -> Result<PreprocessMap> {
    check_dilation(dil)?;
    let l = dil.dim_ex();
    check_bases(&bases, 2, l)?;
    let g = dil.group();
    let (mm, rank) = (dil.messages(), dil.rank());
    let mut a = ComplexMatrix::zeros(l * l, l);
    for q in 0..2 {
        for k in g.elements() {
            for r in 0..rank {
                let mut eta = vec![Complex64::new(0.0, 0.0); l * l];
                for s in 0..2 {
                    for t in g.elements() {
                        let left = mu(&bases, 0, mm, rank, s, t, r);
                        let right = mu(&bases, 1, mm, rank, q ^ s, g.difference(k, t), r);
                        for (e, x) in eta.iter_mut().zip(kron_vec(&left, &right)) {
                            *e += x;
                        }
                    }
                }
                inverse_scale(&mut eta, ((2 * mm) as f64).sqrt());
                add_outer(&mut a, &eta, dil.omega(q, k, r));
            }
        }
    }
    Ok(PreprocessMap {
        kind: MapKind::Entangled,
        group: g.clone(),
        rank,
        n_observers: 2,
        kraus: vec![a],
        local_bases: bases,
    })
}

pub fn build_bipartite_separable(dil: &ProjectiveDilation) -> Result<PreprocessMap> {
    build_bipartite_separable_with(dil, standard_bases(dil, 2))
}

/// Kraus family
/// `A^{(s)}_{k,r} = (2M)^{-1/2} |a^{(s)}_{k,r}⟩ ⊗ Σ_{q,j} |b^{(q⊕s)}_{k̄∘j,r}⟩⟨ω^{(q)}_{j,r}|`,
/// ordered by `(s, k, r)`.
pub fn build_bipartite_separable_with(dil: &ProjectiveDilation, bases: Vec<ComplexMatrix>) -> Result<PreprocessMap> {
    check_dilation(dil)?;
    let l = dil.dim_ex();
    check_bases(&bases, 2, l)?;
    let g = dil.group();
    let (mm, rank) = (dil.messages(), dil.rank());
    let norm = ((2 * mm) as f64).sqrt();
    let mut kraus = Vec::with_capacity(l);
    for s in 0..2 {
        for k in g.elements() {
            for r in 0..rank {
                let a = mu(&bases, 0, mm, rank, s, k, r);
                let mut op = ComplexMatrix::zeros(l * l, l);
                for q in 0..2 {
                    for j in g.elements() {
                        let b = mu(&bases, 1, mm, rank, q ^ s, g.difference(j, k), r);
                        let mut out = kron_vec(&a, &b);
                        inverse_scale(&mut out, norm);
                        add_outer(&mut op, &out, dil.omega(q, j, r));
                    }
                }
                kraus.push(op);
            }
        }
    }
    Ok(PreprocessMap {
        kind: MapKind::Separable,
        group: g.clone(),
        rank,
        n_observers: 2,
        kraus,
        local_bases: bases,
    })
}

pub fn build_multipartite(dil: &ProjectiveDilation, n: usize, cap: usize) -> Result<PreprocessMap> {
    build_multipartite_with(dil, n, cap, standard_bases(dil, n))
}

/// `A_N = Σ |η^{(q)}_{k,r}⟩⟨ω^{(q)}_{k,r}|` with
/// `η^{(q)}_{k,r} = C⁻¹ Σ_{s ∈ S_q} Σ_{t ∈ 𝒢_k} ⊗_n μ^{(s_n)}_{t_n,r}`,
/// `C = (2M)^{(N-1)/2}`, where `S_q` fixes the parity of `s` and `𝒢_k` the
/// product of `t`.
pub fn build_multipartite_with(
    dil: &ProjectiveDilation,
    n: usize,
    cap: usize,
    bases: Vec<ComplexMatrix>,
) -> Result<PreprocessMap> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("at least two observers are required, got {n}")));
    }
    check_dilation(dil)?;
    let l = dil.dim_ex();
    let total = check_cap(l, n, cap)?;
    check_bases(&bases, n, l)?;
    let g = dil.group();
    let (mm, rank) = (dil.messages(), dil.rank());
    let c = ((2 * mm) as f64).powf((n - 1) as f64 / 2.0);
    let free = n - 1;
    let mut a = ComplexMatrix::zeros(total, l);
    for q in 0..2 {
        for k in g.elements() {
            for r in 0..rank {
                let mut eta = vec![Complex64::new(0.0, 0.0); total];
                for s_bits in 0..(1usize << free) {
                    let mut s: Vec<usize> = (0..free).map(|i| (s_bits >> (free - 1 - i)) & 1).collect();
                    s.push(q ^ (s.iter().sum::<usize>() & 1));
                    for t_code in 0..mm.pow(free as u32) {
                        let mut t = Vec::with_capacity(n);
                        let mut rest = t_code;
                        for _ in 0..free {
                            t.push(rest % mm);
                            rest /= mm;
                        }
                        t.reverse();
                        t.push(g.difference(k, g.compose_all(t.iter().copied())));
                        let product = (0..n).fold(vec![Complex64::new(1.0, 0.0)], |acc, i| {
                            kron_vec(&acc, &mu(&bases, i, mm, rank, s[i], t[i], r))
                        });
                        for (e, x) in eta.iter_mut().zip(product) {
                            *e += x;
                        }
                    }
                }
                inverse_scale(&mut eta, c);
                add_outer(&mut a, &eta, dil.omega(q, k, r));
            }
        }
    }
    Ok(PreprocessMap {
        kind: MapKind::Entangled,
        group: g.clone(),
        rank,
        n_observers: n,
        kraus: vec![a],
        local_bases: bases,
    })
}

fn add_outer(target: &mut ComplexMatrix, u: &[Complex64], v: &[Complex64]) {
    for (i, x) in u.iter().enumerate() {
        if *x == Complex64::new(0.0, 0.0) {
            continue;
        }
        for (j, y) in v.iter().enumerate() {
            target[(i, j)] += x * y.conj();
        }
    }
}

/// `ρ'_m = Σ_K K P†ρ_m P K†`, one composite state per message.
pub fn preprocess(map: &PreprocessMap, set: &AguStateSet, dil: &ProjectiveDilation) -> Result<Vec<CompositeState>> {
    if set.dim() != dil.dim() || set.len() != map.group.order() || set.rank() != map.rank || dil.dim_ex() != map.local_dim()
    {
        return Err(Error::Dimension("preprocessing map, dilation and states disagree".into()));
    }
    let l = map.local_dim();
    set.group()
        .elements()
        .map(|m| {
            let mut vectors = Vec::with_capacity(map.kraus.len() * set.rank());
            for psi in set.vectors(m) {
                let mut lifted = psi.clone();
                lifted.resize(l, Complex64::new(0.0, 0.0));
                for k in &map.kraus {
                    vectors.push(k.apply(&lifted));
                }
            }
            CompositeState::new(map.dims(), vectors)
        })
        .collect()
}

/// The states as they stand before preprocessing: `ρ_m` embedded in the
/// first factor, every other observer holding a fixed ancilla `|0⟩`.
pub fn baseline_states(set: &AguStateSet, dil: &ProjectiveDilation, n: usize) -> Result<Vec<CompositeState>> {
    let l = dil.dim_ex();
    let ancilla = crate::numerics::unit_vector(l, 0);
    set.group()
        .elements()
        .map(|m| {
            let vectors = set
                .vectors(m)
                .iter()
                .map(|psi| {
                    let mut lifted = psi.clone();
                    lifted.resize(l, Complex64::new(0.0, 0.0));
                    (1..n).fold(lifted, |acc, _| kron_vec(&acc, &ancilla))
                })
                .collect();
            CompositeState::new(vec![l; n], vectors)
        })
        .collect()
}

fn subsets_to_check(n: usize) -> Vec<Vec<usize>> {
    if n <= 3 {
        (1..(1usize << n) - 1)
            .map(|mask| (0..n).filter(|i| mask >> i & 1 == 1).collect())
            .collect()
    } else {
        (0..n).map(|nu| (0..n).filter(|&i| i != nu).collect()).collect()
    }
}

/// Largest `‖Tr_S̄ ρ'_j − Tr_S̄ ρ'_k‖_F` over message pairs and observer
/// subsets `S`: every `N−1` subset, and every proper subset when `N ≤ 3`.
pub fn check_secrecy(states: &[CompositeState]) -> Result<f64> {
    let Some(first) = states.first() else {
        return Ok(0.0);
    };
    if states.iter().any(|s| s.dims != first.dims) {
        return Err(Error::Dimension("states live on different composites".into()));
    }
    let mut worst: f64 = 0.0;
    for keep in subsets_to_check(first.dims.len()) {
        let reduced = states.iter().map(|s| s.reduced(&keep)).collect::<Result<Vec<_>>>()?;
        for (j, a) in reduced.iter().enumerate() {
            for b in &reduced[j + 1..] {
                worst = worst.max(a.distance(b));
            }
        }
    }
    Ok(worst)
}

/// Decoded receiver outcome with the audit trail of rank labels.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Decoded {
    /// `None` is the failure outcome `?`.
    pub outcome: Option<usize>,
    pub r_labels: Vec<usize>,
}

/// `Π'_k` collects product outcomes with even `s`-parity, equal `r` labels
/// and `t_0∘…∘t_{N−1} = k`; everything else is `Π'_?`.
#[derive(Clone, Debug)]
pub struct ReceiverPovm {
    group: AbelianGroup,
    rank: usize,
    local_bases: Vec<ComplexMatrix>,
}

pub fn receiver_povm(map: &PreprocessMap) -> ReceiverPovm {
    ReceiverPovm {
        group: map.group.clone(),
        rank: map.rank,
        local_bases: map.local_bases.clone(),
    }
}

impl ReceiverPovm {
    pub fn new(group: AbelianGroup, rank: usize, local_bases: Vec<ComplexMatrix>) -> Result<Self> {
        let l = 2 * group.order() * rank;
        let n = local_bases.len();
        if n < 2 {
            return Err(Error::InvalidArgument("at least two observers are required".into()));
        }
        check_bases(&local_bases, n, l)?;
        Ok(ReceiverPovm {
            group,
            rank,
            local_bases,
        })
    }

    pub fn n_observers(&self) -> usize {
        self.local_bases.len()
    }

    pub fn local_dim(&self) -> usize {
        2 * self.group.order() * self.rank
    }

    pub fn dims(&self) -> Vec<usize> {
        vec![self.local_dim(); self.n_observers()]
    }

    pub fn composite_dim(&self) -> usize {
        self.local_dim().pow(self.n_observers() as u32)
    }

    pub fn local_bases(&self) -> &[ComplexMatrix] {
        &self.local_bases
    }

    /// `(s, t, r)` of a local basis index.
    pub fn label(&self, index: usize) -> (usize, usize, usize) {
        let (mm, rank) = (self.group.order(), self.rank);
        (index / (mm * rank), (index / rank) % mm, index % rank)
    }

    /// Per-observer `(s, t, r)` labels of a composite index.
    pub fn labels(&self, index: usize) -> Vec<(usize, usize, usize)> {
        let l = self.local_dim();
        let mut rest = index;
        let mut out = vec![(0, 0, 0); self.n_observers()];
        for slot in out.iter_mut().rev() {
            *slot = self.label(rest % l);
            rest /= l;
        }
        out
    }

    pub fn decode(&self, outcomes: &[(usize, usize, usize)]) -> Result<Decoded> {
        if outcomes.len() != self.n_observers() {
            return Err(Error::InvalidArgument(format!(
                "{} outcome labels for {} observers",
                outcomes.len(),
                self.n_observers()
            )));
        }
        for &(s, t, r) in outcomes {
            if s > 1 || t >= self.group.order() || r >= self.rank {
                return Err(Error::InvalidArgument(format!("malformed outcome label ({s}, {t}, {r})")));
            }
        }
        let r_labels: Vec<usize> = outcomes.iter().map(|o| o.2).collect();
        let parity = outcomes.iter().map(|o| o.0).sum::<usize>() & 1;
        let equal_r = r_labels.windows(2).all(|w| w[0] == w[1]);
        let outcome = (parity == 0 && equal_r).then(|| self.group.compose_all(outcomes.iter().map(|o| o.1)));
        Ok(Decoded { outcome, r_labels })
    }

    /// Outcome (`None` for `?`) of a composite product-basis index.
    pub fn outcome_of(&self, index: usize) -> Option<usize> {
        self.decode(&self.labels(index)).ok().and_then(|d| d.outcome)
    }

    /// `[Tr(ρ Π'_0), …, Tr(ρ Π'_{M−1}), Tr(ρ Π'_?)]`.
    pub fn probabilities(&self, state: &CompositeState) -> Result<Vec<f64>> {
        let dist = state.product_distribution(&self.local_bases)?;
        Ok(self.bin(&dist))
    }

    /// Sums a product-basis distribution into the `M + 1` outcomes.
    pub fn bin(&self, dist: &[f64]) -> Vec<f64> {
        let mm = self.group.order();
        let mut out = vec![0.0; mm + 1];
        for (i, p) in dist.iter().enumerate() {
            out[self.outcome_of(i).unwrap_or(mm)] += p;
        }
        out
    }

    /// `Π'_k` as a matrix; `None` gives `Π'_?`.
    pub fn operator(&self, outcome: Option<usize>) -> Result<ComplexMatrix> {
        let d = self.composite_dim();
        if d.checked_mul(d).is_none_or(|n| n > MAX_ENTRIES) {
            return Err(Error::Overflow { rows: d, cols: d, max: MAX_ENTRIES });
        }
        let mut out = ComplexMatrix::zeros(d, d);
        for i in (0..d).filter(|&i| self.outcome_of(i) == outcome) {
            let v = self.product_vector(i);
            add_outer(&mut out, &v, &v);
        }
        Ok(out)
    }

    fn product_vector(&self, index: usize) -> Vec<Complex64> {
        let l = self.local_dim();
        let n = self.n_observers();
        (0..n).fold(vec![Complex64::new(1.0, 0.0)], |acc, i| {
            let digit = index / l.pow((n - 1 - i) as u32) % l;
            kron_vec(&acc, &self.local_bases[i].column(digit))
        })
    }

    pub fn to_povm(&self) -> Result<Povm> {
        let conclusive = self
            .group
            .elements()
            .map(|k| self.operator(Some(k)))
            .collect::<Result<Vec<_>>>()?;
        Povm::new(conclusive, self.operator(None)?)
    }
}

/// `max_{m,k} |Tr(ρ'_m Π'_k) − Tr(P†ρ_m P Ω_k)|`.
pub fn check_equivalence(
    set: &AguStateSet,
    dil: &ProjectiveDilation,
    map: &PreprocessMap,
    rp: &ReceiverPovm,
) -> Result<f64> {
    let states = preprocess(map, set, dil)?;
    equivalence_deviation(set, dil, &states, rp)
}

/// As [`check_equivalence`] for already preprocessed states.
pub fn equivalence_deviation(
    set: &AguStateSet,
    dil: &ProjectiveDilation,
    states: &[CompositeState],
    rp: &ReceiverPovm,
) -> Result<f64> {
    let reference: Vec<ComplexMatrix> = (0..dil.messages())
        .map(|k| dil.compress(&dil.conclusive_projector(k)))
        .chain(std::iter::once(dil.compress(&dil.failure_projector())))
        .collect();
    let mut worst: f64 = 0.0;
    for (m, state) in states.iter().enumerate() {
        let probs = rp.probabilities(state)?;
        for (p, omega) in probs.iter().zip(&reference) {
            worst = worst.max((p - trace_product(set.state(m), omega)).abs());
        }
    }
    Ok(worst)
}
