use std::cmp::Ordering;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use super::conic::{optimal_seed_operator, povm_from_seed};
use super::me::srm;
use super::search::{dominance_check, DominanceReport};
use super::unambiguous::unambiguous_filter;
use super::{outcome_probs, Povm, ProbTable};
use crate::error::{Error, Result};
use crate::numerics::{herm_eigen, inner, psd_inv_sqrt, random_unitary, Complex64, ComplexMatrix, Tolerances};
use crate::states::AguStateSet;
use crate::symmetry::CharacterBasis;

/// Required agreement between requested and achieved failure probability.
const FAILURE_TOLERANCE: f64 = 1e-6;
const FD_STEP: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OimOptions {
    /// Random starting points in addition to the uniform start.
    pub restarts: usize,
    pub seed: u64,
    /// Coordinate step of the refinement pass.
    pub grid_step: f64,
    pub max_iterations: usize,
    /// Random measurements drawn for the dominance check; zero disables it.
    pub dominance_samples: usize,
}

impl Default for OimOptions {
    fn default() -> Self {
        OimOptions {
            restarts: 20,
            seed: 0x5eed,
            grid_step: 1e-2,
            max_iterations: 300,
            dominance_samples: 2000,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OimMethod {
    /// `p = 0` (square-root measurement) or `p = 1` (always fail).
    Endpoint,
    /// Water-filling over the character amplitudes of a pure set.
    ClosedForm,
    /// Projected-gradient search over covariant failure operators.
    Numeric,
    /// Interior-point solution of the covariant conic program.
    Conic,
}

#[derive(Clone, Debug, Serialize)]
pub struct OimCertificate {
    pub method: OimMethod,
    pub evaluations: usize,
    /// Largest conclusive error probability `P[k|m]`, `k ≠ m`.
    pub max_error: f64,
    pub dominance: Option<DominanceReport>,
}

#[derive(Clone, Debug)]
pub struct OimSolution {
    pub povm: Povm,
    /// Spectrum of `Π_?` on the character basis, block by block.
    pub lambda: Vec<f64>,
    pub p_target: f64,
    pub p_achieved: f64,
    pub correct_prob: f64,
    pub probs: ProbTable,
    pub certificate: OimCertificate,
}

/// Conclusive part `Π_m = Λ Ŝ_m Λ` with `Λ = (I - Π_?)^{1/2}` and `Ŝ` the
/// square-root measurement of the filtered states `Λ ψ_{m,r}`.
pub fn filtered_srm(set: &AguStateSet, failure: &ComplexMatrix, tol: &Tolerances) -> Result<Povm> {
    let d = set.dim();
    if failure.rows() != d || !failure.is_square() {
        return Err(Error::Dimension("failure operator does not match the state set".into()));
    }
    if !set.spans_space() {
        return Err(Error::InvalidStates("filtered square-root measurement needs states spanning the space".into()));
    }
    let t = filter_map(set, failure, tol)?;
    let vectors = super::covariant_vectors(set, &t);
    Povm::from_vectors(vectors, failure.clone())
}

/// `Λ S'^{+1/2} Λ` with `S' = Λ S Λ`.
fn filter_map(set: &AguStateSet, failure: &ComplexMatrix, tol: &Tolerances) -> Result<ComplexMatrix> {
    let lambda = herm_eigen(&failure.hermitian_part(), tol.validity)?.map_values(|x| (1.0 - x).clamp(0.0, 1.0).sqrt());
    let filtered = (&(&lambda * &set.frame_operator()) * &lambda).hermitian_part();
    let root = psd_inv_sqrt(&filtered, None, tol.validity)?;
    Ok(&(&lambda * &root) * &lambda)
}

pub fn solve_oim(set: &AguStateSet, p: f64, tol: &Tolerances) -> Result<OimSolution> {
    solve_oim_with(set, p, &OimOptions::default(), tol)
}

/// Optimal inconclusive measurement with average failure probability `p`.
pub fn solve_oim_with(set: &AguStateSet, p: f64, opts: &OimOptions, tol: &Tolerances) -> Result<OimSolution> {
    if !(0.0..=1.0).contains(&p) || p.is_nan() {
        return Err(Error::InvalidArgument(format!("failure probability {p} outside [0, 1]")));
    }
    if !set.spans_space() {
        return Err(Error::InvalidStates(
            "optimal inconclusive measurement needs states spanning the space".into(),
        ));
    }
    let d = set.dim();
    let basis = set.rep().character_basis(tol)?;

    if p == 0.0 || p == 1.0 {
        let povm = if p == 0.0 { srm(set, tol)? } else { Povm::always_fail(d, set.len()) };
        return finish(set, povm, vec![p; d], p, OimMethod::Endpoint, 0, None);
    }

    if !(set.is_pure() && basis.is_multiplicity_free()) {
        let x = optimal_seed_operator(set, &basis, p, tol)?;
        if let Some(povm) = povm_from_seed(set, &x, set.rank(), tol)? {
            let lambda = block_spectrum(povm.failure(), &basis, tol)?;
            let correct = outcome_probs(set, &povm)?.avg_correct();
            let dominance = if opts.dominance_samples > 0 {
                Some(dominance_check(set, p, correct, opts.dominance_samples, opts.seed, tol)?)
            } else {
                None
            };
            return finish(set, povm, lambda, p, OimMethod::Conic, 0, dominance);
        }
    }

    let (failure, lambda, method, evaluations) = if set.is_pure() && basis.is_multiplicity_free() {
        let (failure, lambda) = water_filling(set, &basis, p);
        (failure, lambda, OimMethod::ClosedForm, 0)
    } else {
        let mut search = BlockSearch::new(set, &basis, p, tol)?;
        let mut seeds = Vec::new();
        if set.is_linearly_independent() {
            let (p_u, filter) = unambiguous_filter(set, &basis, tol)?;
            if p >= p_u && p_u < 1.0 {
                let s = (1.0 - p) / (1.0 - p_u);
                seeds.push(
                    filter
                        .iter()
                        .map(|x| &ComplexMatrix::identity(x.rows()) - &x.scale_real(s))
                        .collect(),
                );
            }
        }
        let blocks = search.run(opts, seeds)?;
        let lambda = search.spectrum(&blocks)?;
        (search.assemble(&blocks), lambda, OimMethod::Numeric, search.evaluations)
    };
    let povm = filtered_srm(set, &failure, tol)?.covariant();
    let correct = outcome_probs(set, &povm)?.avg_correct();
    let dominance = if opts.dominance_samples > 0 {
        Some(dominance_check(set, p, correct, opts.dominance_samples, opts.seed, tol)?)
    } else {
        None
    };
    finish(set, povm, lambda, p, method, evaluations, dominance)
}

fn finish(
    set: &AguStateSet,
    povm: Povm,
    lambda: Vec<f64>,
    p: f64,
    method: OimMethod,
    evaluations: usize,
    dominance: Option<DominanceReport>,
) -> Result<OimSolution> {
    let probs = outcome_probs(set, &povm)?;
    let p_achieved = probs.avg_failure();
    if (p_achieved - p).abs() > FAILURE_TOLERANCE {
        return Err(Error::InvalidPovm(format!(
            "solver reached failure probability {p_achieved} instead of {p}"
        )));
    }
    Ok(OimSolution {
        correct_prob: probs.avg_correct(),
        certificate: OimCertificate {
            method,
            evaluations,
            max_error: probs.max_error(),
            dominance,
        },
        povm,
        lambda: lambda.into_iter().map(|x| x.clamp(0.0, 1.0)).collect(),
        p_target: p,
        p_achieved,
        probs,
    })
}

fn block_spectrum(op: &ComplexMatrix, basis: &CharacterBasis, tol: &Tolerances) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for block in &basis.blocks {
        let v = ComplexMatrix::from_columns(basis.block_vectors(block))?;
        out.extend(herm_eigen(&(&(&v.adjoint() * op) * &v).hermitian_part(), tol.validity)?.values);
    }
    Ok(out)
}

/// Pure sets: with `x_k = √(1-λ_k)|c_k|` the success probability is
/// `(Σ_k x_k)²/M` and the constraint is `Σ_k x_k² = 1 - p`, so the optimum is
/// `x_k = min(|c_k|, t)`.
fn water_filling(set: &AguStateSet, basis: &CharacterBasis, p: f64) -> (ComplexMatrix, Vec<f64>) {
    let amps: Vec<f64> = set.character_coefficients(basis).iter().map(|c| c[0].norm()).collect();
    let mass = |t: f64| amps.iter().map(|&a| a.min(t).powi(2)).sum::<f64>();
    let (mut lo, mut hi) = (0.0, amps.iter().copied().fold(0.0, f64::max));
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mass(mid) < 1.0 - p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let t = 0.5 * (lo + hi);
    let lambda: Vec<f64> = amps.iter().map(|&a| 1.0 - (a.min(t) / a).powi(2)).collect();
    let d = set.dim();
    let failure = basis
        .vectors
        .iter()
        .zip(&lambda)
        .fold(ComplexMatrix::zeros(d, d), |acc, (f, &l)| &acc + &ComplexMatrix::projector(f).scale_real(l));
    (failure, lambda)
}

/// Pure, linearly independent sets: `1 - M min_k |c_k|²`. Dependent sets
/// cannot be discriminated unambiguously and give 1. Mixed independent sets
/// use the optimal error-free filter.
pub fn unamb_threshold(set: &AguStateSet, tol: &Tolerances) -> Result<f64> {
    if !set.is_linearly_independent() {
        return Ok(1.0);
    }
    let basis = set.rep().character_basis(tol)?;
    if set.is_pure() {
        let min = set
            .character_coefficients(&basis)
            .iter()
            .map(|c| c[0].norm_sqr())
            .fold(f64::INFINITY, f64::min);
        return Ok((1.0 - set.len() as f64 * min).max(0.0));
    }

    Ok(unambiguous_filter(set, &basis, tol)?.0)
}

/// Covariant failure operators `Π_? = ⊕_χ V_χ B_χ V_χ†` with `0 ≤ B_χ ≤ I`,
/// constrained to `Σ_χ Tr(W_χ B_χ) = p` where `W_χ = V_χ† (S/M) V_χ`.
struct BlockSearch<'a> {
    set: &'a AguStateSet,
    tol: &'a Tolerances,
    p: f64,
    frames: Vec<ComplexMatrix>,
    weights: Vec<ComplexMatrix>,
    evaluations: usize,
}

type Blocks = Vec<ComplexMatrix>;

#[derive(Clone)]
struct Candidate {
    blocks: Blocks,
    value: f64,
    norm: f64,
    lambda: Vec<f64>,
}

impl<'a> BlockSearch<'a> {
    fn new(set: &'a AguStateSet, basis: &CharacterBasis, p: f64, tol: &'a Tolerances) -> Result<Self> {
        let mean = set.frame_operator().scale_real(set.prior());
        let mut frames = Vec::new();
        let mut weights = Vec::new();
        for block in &basis.blocks {
            let v = ComplexMatrix::from_columns(basis.block_vectors(block))?;
            weights.push((&(&v.adjoint() * &mean) * &v).hermitian_part());
            frames.push(v);
        }
        Ok(BlockSearch {
            set,
            tol,
            p,
            frames,
            weights,
            evaluations: 0,
        })
    }

    fn assemble(&self, blocks: &Blocks) -> ComplexMatrix {
        let d = self.set.dim();
        self.frames
            .iter()
            .zip(blocks)
            .fold(ComplexMatrix::zeros(d, d), |acc, (v, b)| &acc + &(&(v * b) * &v.adjoint()))
            .hermitian_part()
    }

    /// `Tr(ρ_e Π_e)`, equal to the average success probability by covariance.
    fn objective(&mut self, blocks: &Blocks) -> Result<f64> {
        self.evaluations += 1;
        let t = filter_map(self.set, &self.assemble(blocks), self.tol)?;
        let seeds = self.set.seeds();
        let detectors: Vec<Vec<Complex64>> = seeds.iter().map(|s| t.apply(s)).collect();
        Ok(seeds
            .iter()
            .flat_map(|s| detectors.iter().map(move |v| inner(s, v).norm_sqr()))
            .sum())
    }

    fn failure_of(&self, blocks: &Blocks) -> f64 {
        self.weights.iter().zip(blocks).map(|(w, b)| super::trace_product(w, b)).sum()
    }

    /// `B_χ = clip_{[0,1]}(Y_χ - τ W_χ)` with `τ` chosen by bisection so the
    /// failure constraint holds.
    fn project(&self, targets: &Blocks) -> Result<Blocks> {
        let eval = |tau: f64| -> Result<(Blocks, f64)> {
            let blocks: Blocks = targets
                .iter()
                .zip(&self.weights)
                .map(|(y, w)| clip_unit(&(y - &w.scale_real(tau)), self.tol))
                .collect::<Result<_>>()?;
            let f = self.failure_of(&blocks);
            Ok((blocks, f))
        };
        let (mut lo, mut hi) = (-1.0, 1.0);
        let mut expand = 0;
        while eval(lo)?.1 < self.p && expand < 200 {
            lo *= 2.0;
            expand += 1;
        }
        while eval(hi)?.1 > self.p && expand < 400 {
            hi *= 2.0;
            expand += 1;
        }
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if eval(mid)?.1 > self.p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let (hi_blocks, hi_f) = eval(hi)?;
        let (lo_blocks, lo_f) = eval(lo)?;
        // Blend the bracket ends so the constraint holds to rounding.
        if (lo_f - hi_f).abs() < 1e-15 {
            return Ok(hi_blocks);
        }
        let s = ((self.p - hi_f) / (lo_f - hi_f)).clamp(0.0, 1.0);
        Ok(hi_blocks
            .iter()
            .zip(&lo_blocks)
            .map(|(h, l)| &h.scale_real(1.0 - s) + &l.scale_real(s))
            .collect())
    }

    fn coordinates(&self) -> Vec<(usize, usize, usize, bool)> {
        let mut coords = Vec::new();
        for (b, w) in self.weights.iter().enumerate() {
            let n = w.rows();
            for i in 0..n {
                coords.push((b, i, i, false));
                for j in i + 1..n {
                    coords.push((b, i, j, false));
                    coords.push((b, i, j, true));
                }
            }
        }
        coords
    }

    fn nudge(blocks: &Blocks, coord: (usize, usize, usize, bool), h: f64) -> Blocks {
        let (b, i, j, imag) = coord;
        let mut out = blocks.clone();
        let delta = if imag { Complex64::new(0.0, h) } else { Complex64::new(h, 0.0) };
        out[b][(i, j)] += delta;
        if i != j {
            out[b][(j, i)] += delta.conj();
        }
        out
    }

    fn gradient(&mut self, blocks: &Blocks, coords: &[(usize, usize, usize, bool)]) -> Result<Vec<f64>> {
        coords
            .iter()
            .map(|&c| {
                let up = self.objective(&Self::nudge(blocks, c, FD_STEP))?;
                let down = self.objective(&Self::nudge(blocks, c, -FD_STEP))?;
                Ok((up - down) / (2.0 * FD_STEP))
            })
            .collect()
    }

    fn ascend(&mut self, start: Blocks, max_iterations: usize) -> Result<(Blocks, f64)> {
        let coords = self.coordinates();
        let mut x = self.project(&start)?;
        let mut fx = self.objective(&x)?;
        let mut step = 0.5;
        for _ in 0..max_iterations {
            let g = self.gradient(&x, &coords)?;
            if g.iter().map(|v| v * v).sum::<f64>().sqrt() < 1e-12 {
                break;
            }
            let mut moved = false;
            while step > 1e-12 {
                let target = coords.iter().zip(&g).fold(x.clone(), |acc, (&c, &gi)| Self::nudge(&acc, c, step * gi));
                let y = self.project(&target)?;
                let fy = self.objective(&y)?;
                if fy > fx + 1e-15 {
                    x = y;
                    fx = fy;
                    step *= 1.5;
                    moved = true;
                    break;
                }
                step *= 0.5;
            }
            if !moved {
                break;
            }
        }
        Ok((x, fx))
    }

    fn refine(&mut self, start: Blocks, value: f64, grid: f64) -> Result<(Blocks, f64)> {
        let coords = self.coordinates();
        let (mut x, mut fx) = (start, value);
        for _ in 0..50 {
            let mut improved = false;
            for &c in &coords {
                for h in [grid, -grid] {
                    let y = self.project(&Self::nudge(&x, c, h))?;
                    let fy = self.objective(&y)?;
                    if fy > fx + 1e-13 {
                        x = y;
                        fx = fy;
                        improved = true;
                    }
                }
            }
            if !improved {
                break;
            }
        }
        Ok((x, fx))
    }

    fn candidate(&self, blocks: Blocks, value: f64) -> Result<Candidate> {
        let lambda = self.spectrum(&blocks)?;
        let norm = lambda.iter().map(|x| x * x).sum::<f64>().sqrt();
        Ok(Candidate {
            blocks,
            value,
            norm,
            lambda,
        })
    }

    fn spectrum(&self, blocks: &Blocks) -> Result<Vec<f64>> {
        let mut out = Vec::new();
        for b in blocks {
            out.extend(herm_eigen(b, self.tol.validity)?.values);
        }
        Ok(out)
    }

    fn run(&mut self, opts: &OimOptions, extra: Vec<Blocks>) -> Result<Blocks> {
        let mut rng = ChaCha20Rng::seed_from_u64(opts.seed);
        let mut starts: Vec<Blocks> = vec![self.weights.iter().map(|w| ComplexMatrix::identity(w.rows()).scale_real(self.p)).collect()];
        starts.extend(extra);
        for _ in 0..opts.restarts {
            starts.push(
                self.weights
                    .iter()
                    .map(|w| {
                        let n = w.rows();
                        let u = random_unitary(n, &mut rng);
                        let diag: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
                        (&(&u * &ComplexMatrix::from_real_diagonal(&diag)) * &u.adjoint()).hermitian_part()
                    })
                    .collect(),
            );
        }
        let mut candidates = Vec::with_capacity(starts.len());
        for start in starts {
            let (x, fx) = self.ascend(start, opts.max_iterations)?;
            candidates.push(self.candidate(x, fx)?);
        }
        candidates.sort_by(compare_candidates);
        let best = candidates.swap_remove(0);
        let (x, _) = self.refine(best.blocks, best.value, opts.grid_step)?;
        let (x, fx) = self.ascend(x, opts.max_iterations)?;
        let polished = self.candidate(x, fx)?;
        Ok(polished.blocks)
    }
}

/// Higher objective first, then smaller `‖λ‖`, then lexicographic `λ`.
fn compare_candidates(a: &Candidate, b: &Candidate) -> Ordering {
    if (a.value - b.value).abs() > 1e-10 {
        return b.value.partial_cmp(&a.value).unwrap_or(Ordering::Equal);
    }
    if (a.norm - b.norm).abs() > 1e-10 {
        return a.norm.partial_cmp(&b.norm).unwrap_or(Ordering::Equal);
    }
    a.lambda
        .iter()
        .zip(&b.lambda)
        .map(|(x, y)| x.partial_cmp(y).unwrap_or(Ordering::Equal))
        .find(|o| *o != Ordering::Equal)
        .unwrap_or(Ordering::Equal)
}

fn clip_unit(h: &ComplexMatrix, tol: &Tolerances) -> Result<ComplexMatrix> {
    Ok(herm_eigen(&h.hermitian_part(), tol.validity)?.map_values(|x| x.clamp(0.0, 1.0)))
}
