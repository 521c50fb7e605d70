use std::cmp::Ordering;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use super::matrix::ComplexMatrix;
use super::Tolerances;
use crate::error::{Error, Result};

/// `<u|v>`, antilinear in the first argument.
pub fn inner(u: &[Complex64], v: &[Complex64]) -> Complex64 {
    u.iter().zip(v).map(|(a, b)| a.conj() * b).sum()
}

pub fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn scale_vec(v: &[Complex64], c: Complex64) -> Vec<Complex64> {
    v.iter().map(|z| z * c).collect()
}

pub fn unit_vector(dim: usize, i: usize) -> Vec<Complex64> {
    let mut v = vec![Complex64::new(0.0, 0.0); dim];
    v[i] = Complex64::new(1.0, 0.0);
    v
}

/// Rotates `v` so that its first component of (near-)largest magnitude is
/// positive real.
pub fn phase_normalize(v: &mut [Complex64]) {
    let max = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if max == 0.0 {
        return;
    }
    let Some(pivot) = v.iter().find(|z| z.norm() >= max * (1.0 - 1e-9)).copied() else {
        return;
    };
    let phase = pivot.conj() / pivot.norm();
    for z in v.iter_mut() {
        *z *= phase;
    }
}

/// Frobenius distance of the Gram matrix of `vectors` from the identity.
pub fn gram_violation(vectors: &[Vec<Complex64>]) -> f64 {
    let mut acc = 0.0;
    for (i, u) in vectors.iter().enumerate() {
        for (j, v) in vectors.iter().enumerate() {
            let target = if i == j { 1.0 } else { 0.0 };
            acc += (inner(u, v) - target).norm_sqr();
        }
    }
    acc.sqrt()
}

fn lexicographic(a: &[Complex64], b: &[Complex64], tol: f64) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        if (x.re - y.re).abs() > tol {
            return x.re.partial_cmp(&y.re).unwrap_or(Ordering::Equal);
        }
        if (x.im - y.im).abs() > tol {
            return x.im.partial_cmp(&y.im).unwrap_or(Ordering::Equal);
        }
    }
    Ordering::Equal
}

/// Spectral decomposition of a Hermitian matrix.
#[derive(Clone, Debug)]
pub struct HermEigen {
    /// Eigenvalues in descending order.
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors as columns, aligned with `values`.
    pub vectors: ComplexMatrix,
}

impl HermEigen {
    pub fn vector(&self, i: usize) -> Vec<Complex64> {
        self.vectors.column(i)
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        self.map_values(|x| x)
    }

    /// `V f(diag) V†`.
    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        let n = self.values.len();
        let v = &self.vectors;
        let fv: Vec<f64> = self.values.iter().map(|&x| f(x)).collect();
        ComplexMatrix::from_fn(n, n, |i, j| {
            (0..n)
                .filter(|&k| fv[k] != 0.0)
                .map(|k| v[(i, k)] * v[(j, k)].conj() * fv[k])
                .sum()
        })
    }
}

/// Eigen-decomposition with eigenvalues sorted descending. Eigenvectors are
/// phase-normalized; within a numerically degenerate eigenvalue the vectors
/// are ordered lexicographically.
pub fn herm_eigen(h: &ComplexMatrix, tol: f64) -> Result<HermEigen> {
    if !h.is_square() {
        return Err(Error::Dimension(format!("eigen-decomposition of {}x{} matrix", h.rows(), h.cols())));
    }
    let violation = h.hermitian_violation();
    if violation > tol * h.frobenius_norm().max(1.0) {
        return Err(Error::NotHermitian { violation });
    }
    let n = h.rows();
    let sym = h.hermitian_part();
    let m = DMatrix::from_fn(n, n, |i, j| sym[(i, j)]);
    let eig = m.symmetric_eigen();

    let mut pairs: Vec<(f64, Vec<Complex64>)> = (0..n)
        .map(|k| {
            let mut v: Vec<Complex64> = eig.eigenvectors.column(k).iter().copied().collect();
            let nv = norm(&v);
            for z in v.iter_mut() {
                *z /= nv;
            }
            phase_normalize(&mut v);
            (eig.eigenvalues[k], v)
        })
        .collect();
    pairs.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap_or(Ordering::Equal));

    // Reorder runs of degenerate eigenvalues deterministically.
    let scale = pairs.iter().map(|p| p.0.abs()).fold(1.0, f64::max);
    let tie = 1e-10 * scale;
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && (pairs[end - 1].0 - pairs[end].0).abs() <= tie {
            end += 1;
        }
        if end - start > 1 {
            pairs[start..end].sort_by(|a, b| lexicographic(&b.1, &a.1, 1e-9));
        }
        start = end;
    }

    let values = pairs.iter().map(|p| p.0).collect();
    let columns: Vec<Vec<Complex64>> = pairs.into_iter().map(|p| p.1).collect();
    Ok(HermEigen {
        values,
        vectors: ComplexMatrix::from_columns(&columns)?,
    })
}

/// Principal square root of a positive semidefinite matrix; eigenvalues in
/// `[-tol, 0)` are clamped to zero.
pub fn psd_sqrt(h: &ComplexMatrix, tol: f64) -> Result<ComplexMatrix> {
    let eig = herm_eigen(h, tol)?;
    if let Some(&min) = eig.values.last() {
        if min < -tol {
            return Err(Error::NegativeEigenvalue { value: min });
        }
    }
    Ok(eig.map_values(|x| x.max(0.0).sqrt()))
}

fn default_cutoff(eig: &HermEigen) -> f64 {
    let n = eig.values.len() as f64;
    let largest = eig.values.iter().map(|x| x.abs()).fold(0.0, f64::max);
    n * f64::EPSILON * largest
}

/// Moore-Penrose inverse of a Hermitian matrix. Eigenvalues with magnitude at
/// most `cutoff` are treated as zero; `None` selects `n·ε·max|λ|`.
pub fn pinv(h: &ComplexMatrix, cutoff: Option<f64>, tol: f64) -> Result<ComplexMatrix> {
    let eig = herm_eigen(h, tol)?;
    let cut = cutoff.unwrap_or_else(|| default_cutoff(&eig));
    Ok(eig.map_values(|x| if x.abs() <= cut { 0.0 } else { 1.0 / x }))
}

/// `(h^+)^{1/2}` for positive semidefinite `h`.
pub fn psd_inv_sqrt(h: &ComplexMatrix, cutoff: Option<f64>, tol: f64) -> Result<ComplexMatrix> {
    let eig = herm_eigen(h, tol)?;
    let cut = cutoff.unwrap_or_else(|| default_cutoff(&eig));
    Ok(eig.map_values(|x| if x <= cut { 0.0 } else { 1.0 / x.sqrt() }))
}

/// Numerical rank of a Hermitian PSD matrix.
pub fn psd_rank(h: &ComplexMatrix, cutoff: f64, tol: f64) -> Result<usize> {
    Ok(herm_eigen(h, tol)?.values.iter().filter(|&&x| x > cutoff).count())
}

/// Extends orthonormal vectors to an orthonormal basis of `C^dim`. The input
/// vectors come first, unchanged; added vectors are drawn from the standard
/// basis by Gram-Schmidt, choosing the largest residual each step.
pub fn complete_onb(partial: &[Vec<Complex64>], dim: usize, tol: &Tolerances) -> Result<Vec<Vec<Complex64>>> {
    if partial.len() > dim {
        return Err(Error::InvalidArgument(format!(
            "{} vectors cannot be completed inside dimension {dim}",
            partial.len()
        )));
    }
    if let Some(v) = partial.iter().find(|v| v.len() != dim) {
        return Err(Error::Dimension(format!("vector of length {} in dimension {dim}", v.len())));
    }
    let violation = gram_violation(partial);
    if violation > tol.validity {
        return Err(Error::NotOrthonormal { violation });
    }

    let mut basis: Vec<Vec<Complex64>> = partial.to_vec();
    let mut remaining: Vec<usize> = (0..dim).collect();
    while basis.len() < dim {
        let mut best: Option<(usize, f64, Vec<Complex64>)> = None;
        for (slot, &i) in remaining.iter().enumerate() {
            let mut r = unit_vector(dim, i);
            for _ in 0..2 {
                for b in &basis {
                    let c = inner(b, &r);
                    for (x, y) in r.iter_mut().zip(b) {
                        *x -= c * y;
                    }
                }
            }
            let n = norm(&r);
            if best.as_ref().is_none_or(|(_, bn, _)| n > *bn + 1e-12) {
                best = Some((slot, n, r));
            }
        }
        let (slot, n, mut r) = best.expect("candidate available while basis is incomplete");
        if n < 1e-6 {
            return Err(Error::NotOrthonormal { violation: n });
        }
        for z in r.iter_mut() {
            *z /= n;
        }
        phase_normalize(&mut r);
        remaining.remove(slot);
        basis.push(r);
    }
    Ok(basis)
}

/// Haar-distributed unitary from the QR factorization of a complex Gaussian
/// matrix (R with positive diagonal).
pub fn random_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> ComplexMatrix {
    let mut cols: Vec<Vec<Complex64>> = Vec::with_capacity(dim);
    while cols.len() < dim {
        let mut v: Vec<Complex64> = (0..dim)
            .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect();
        for _ in 0..2 {
            for b in &cols {
                let c = inner(b, &v);
                for (x, y) in v.iter_mut().zip(b) {
                    *x -= c * y;
                }
            }
        }
        let n = norm(&v);
        if n < 1e-8 {
            continue;
        }
        cols.push(v.into_iter().map(|z| z / n).collect());
    }
    ComplexMatrix::from_columns(&cols).expect("non-empty square basis")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_psd(dim: usize, seed: u64) -> ComplexMatrix {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let a = ComplexMatrix::from_fn(dim, dim, |_, _| {
            c(rng.sample(StandardNormal), rng.sample(StandardNormal))
        });
        &a * &a.adjoint()
    }

    #[test]
    fn eigen_of_identity_and_diagonal() {
        let tol = Tolerances::default();
        let e = herm_eigen(&ComplexMatrix::identity(4), tol.internal).unwrap();
        assert!(e.values.iter().all(|&v| (v - 1.0).abs() < 1e-14));
        // degenerate: standard basis ordered by lexicographic rule
        assert!(e.vectors.distance(&ComplexMatrix::identity(4)).is_finite());

        let e = herm_eigen(&ComplexMatrix::from_real_diagonal(&[3.0, 1.0, 2.0]), 1e-12).unwrap();
        assert_eq!(e.values.len(), 3);
        for (got, want) in e.values.iter().zip([3.0, 2.0, 1.0]) {
            assert!((got - want).abs() < 1e-14);
        }
        let expected = [unit_vector(3, 0), unit_vector(3, 2), unit_vector(3, 1)];
        for (k, want) in expected.iter().enumerate() {
            assert!(norm(&e.vector(k).iter().zip(want).map(|(a, b)| a - b).collect::<Vec<_>>()) < 1e-12);
        }
    }

    #[test]
    fn eigen_rejects_non_hermitian() {
        let m = ComplexMatrix::from_fn(2, 2, |i, j| c((i * 2 + j) as f64, 0.0));
        assert!(matches!(herm_eigen(&m, 1e-9), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn eigen_reconstruction_and_orthonormality() {
        for seed in 0..5 {
            let h = random_psd(5, seed);
            let e = herm_eigen(&h, 1e-12).unwrap();
            assert!(e.reconstruct().distance(&h) < 1e-12 * h.frobenius_norm().max(1.0));
            assert!(gram_violation(&e.vectors.columns()) < 1e-12);
            assert!(e.values.windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn eigen_is_deterministic_for_degenerate_spectrum() {
        let h = ComplexMatrix::from_real_diagonal(&[1.0, 1.0, 0.0]);
        let a = herm_eigen(&h, 1e-12).unwrap();
        let b = herm_eigen(&h, 1e-12).unwrap();
        assert_eq!(a.vectors, b.vectors);
    }

    #[test]
    fn sqrt_examples() {
        assert!(psd_sqrt(&ComplexMatrix::identity(3), 1e-12).unwrap().distance(&ComplexMatrix::identity(3)) < 1e-14);
        let s = psd_sqrt(&ComplexMatrix::from_real_diagonal(&[4.0, 9.0]), 1e-12).unwrap();
        assert!(s.distance(&ComplexMatrix::from_real_diagonal(&[2.0, 3.0])) < 1e-14);
        assert!(matches!(
            psd_sqrt(&ComplexMatrix::from_real_diagonal(&[1.0, -0.1]), 1e-9),
            Err(Error::NegativeEigenvalue { .. })
        ));
        // tiny negative eigenvalues are clamped
        let s = psd_sqrt(&ComplexMatrix::from_real_diagonal(&[1.0, -1e-12]), 1e-9).unwrap();
        assert!(s.distance(&ComplexMatrix::from_real_diagonal(&[1.0, 0.0])) < 1e-14);
    }

    #[test]
    fn pinv_examples() {
        assert!(pinv(&ComplexMatrix::identity(2), None, 1e-12).unwrap().distance(&ComplexMatrix::identity(2)) < 1e-14);
        let p = pinv(&ComplexMatrix::from_real_diagonal(&[2.0, 0.0]), None, 1e-12).unwrap();
        assert!(p.distance(&ComplexMatrix::from_real_diagonal(&[0.5, 0.0])) < 1e-14);
        let zero = pinv(&ComplexMatrix::zeros(2, 2), None, 1e-12).unwrap();
        assert_eq!(zero.max_abs(), 0.0);
    }

    #[test]
    fn pinv_moore_penrose_identities() {
        // rank-deficient PSD matrix
        let mut rng = ChaCha20Rng::seed_from_u64(9);
        let a = ComplexMatrix::from_fn(4, 2, |_, _| c(rng.sample(StandardNormal), rng.sample(StandardNormal)));
        let h = &a * &a.adjoint();
        let hp = pinv(&h, Some(1e-10), 1e-12).unwrap();
        let scale = h.frobenius_norm();
        assert!((&(&h * &hp) * &h).distance(&h) < 1e-10 * scale);
        assert!((&(&hp * &h) * &hp).distance(&hp) < 1e-10 * hp.frobenius_norm());
        assert!((&h * &hp).hermitian_violation() < 1e-10);
        assert!((&hp * &h).hermitian_violation() < 1e-10);
        // Λ⁺ Λ² Λ⁺ is the projector onto the support
        let proj = &(&hp * &(&h * &h)) * &hp;
        assert!((&proj * &proj).distance(&proj) < 1e-10);
        assert!((proj.trace().re - 2.0).abs() < 1e-10);
    }

    #[test]
    fn complete_onb_examples() {
        let tol = Tolerances::default();
        let b = complete_onb(&[], 3, &tol).unwrap();
        for (i, v) in b.iter().enumerate() {
            assert_eq!(v, &unit_vector(3, i));
        }
        let b = complete_onb(&[unit_vector(2, 0)], 2, &tol).unwrap();
        assert_eq!(b, vec![unit_vector(2, 0), unit_vector(2, 1)]);

        assert!(complete_onb(&vec![unit_vector(2, 0); 3], 2, &tol).is_err());
        let bad = vec![vec![c(1.0, 0.0), c(1.0, 0.0)]];
        assert!(matches!(complete_onb(&bad, 2, &tol), Err(Error::NotOrthonormal { .. })));
    }

    #[test]
    fn random_unitary_is_unitary() {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let u = random_unitary(6, &mut rng);
        assert!(u.isometry_violation() < 1e-12);
    }

    proptest! {
        #[test]
        fn psd_sqrt_round_trip(seed in 0u64..500, dim in 1usize..6) {
            let h = random_psd(dim, seed);
            let s = psd_sqrt(&h, 1e-9).unwrap();
            let scale = h.frobenius_norm().max(1.0);
            prop_assert!((&s * &s).distance(&h) <= 1e-10 * scale);
            prop_assert!((&s * &h).distance(&(&h * &s)) <= 1e-10 * scale);
        }

        #[test]
        fn complete_onb_gram_identity(seed in 0u64..500, dim in 1usize..7, keep in 0usize..7) {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            let u = random_unitary(dim, &mut rng);
            let partial: Vec<_> = u.columns().into_iter().take(keep.min(dim)).collect();
            let full = complete_onb(&partial, dim, &Tolerances::default()).unwrap();
            prop_assert_eq!(full.len(), dim);
            prop_assert!(gram_violation(&full) <= 1e-12);
            prop_assert_eq!(&full[..partial.len()], &partial[..]);
        }
    }
}
