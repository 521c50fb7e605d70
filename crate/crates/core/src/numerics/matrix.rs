use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Largest number of entries a single matrix may hold.
pub const MAX_ENTRIES: usize = 1 << 26;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

/// Dense complex matrix stored in row-major order.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Dimension(format!("empty matrix {rows}x{cols}")));
        }
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{} entries supplied for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidArgument("matrix has non-finite entries".into()));
        }
        Ok(ComplexMatrix { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        ComplexMatrix {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        ComplexMatrix { rows, cols, data }
    }

    pub fn from_diagonal(diag: &[Complex64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let d: Vec<Complex64> = diag.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        Self::from_diagonal(&d)
    }

    /// Builds a matrix whose columns are the given vectors.
    pub fn from_columns(columns: &[Vec<Complex64>]) -> Result<Self> {
        let cols = columns.len();
        let rows = columns.first().map(Vec::len).unwrap_or(0);
        if cols == 0 || rows == 0 {
            return Err(Error::Dimension("no columns supplied".into()));
        }
        if columns.iter().any(|c| c.len() != rows) {
            return Err(Error::Dimension("columns of unequal length".into()));
        }
        Ok(Self::from_fn(rows, cols, |i, j| columns[j][i]))
    }

    /// Rank-one operator |u><v|.
    pub fn outer(u: &[Complex64], v: &[Complex64]) -> Self {
        Self::from_fn(u.len(), v.len(), |i, j| u[i] * v[j].conj())
    }

    /// Projector |v><v|.
    pub fn projector(v: &[Complex64]) -> Self {
        Self::outer(v, v)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn column(&self, j: usize) -> Vec<Complex64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn columns(&self) -> Vec<Vec<Complex64>> {
        (0..self.cols).map(|j| self.column(j)).collect()
    }

    pub fn diagonal(&self) -> Vec<Complex64> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).collect()
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn scale(&self, c: Complex64) -> Self {
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| z * c).collect(),
        }
    }

    pub fn scale_real(&self, c: f64) -> Self {
        self.scale(Complex64::new(c, 0.0))
    }

    pub fn trace(&self) -> Complex64 {
        self.diagonal().into_iter().sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Frobenius norm of `self - other`; panics on shape mismatch.
    pub fn distance(&self, other: &ComplexMatrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "shape mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn hermitian_violation(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        self.distance(&self.adjoint())
    }

    /// Frobenius distance of `self† self` from the identity.
    pub fn isometry_violation(&self) -> f64 {
        let g = &self.adjoint() * self;
        g.distance(&Self::identity(self.cols))
    }

    pub fn hermitian_part(&self) -> Self {
        (self + &self.adjoint()).scale_real(0.5)
    }

    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(self.cols, v.len(), "matrix-vector shape mismatch");
        (0..self.rows)
            .map(|i| {
                let row = &self.data[i * self.cols..(i + 1) * self.cols];
                row.iter().zip(v).map(|(a, b)| a * b).sum()
            })
            .collect()
    }

    /// Real part of `<v|self|v>`.
    pub fn expectation(&self, v: &[Complex64]) -> f64 {
        let w = self.apply(v);
        v.iter().zip(&w).map(|(a, b)| a.conj() * b).sum::<Complex64>().re
    }

    /// Copy of the block starting at `(row0, col0)`.
    pub fn submatrix(&self, row0: usize, col0: usize, rows: usize, cols: usize) -> Self {
        assert!(row0 + rows <= self.rows && col0 + cols <= self.cols, "block out of range");
        Self::from_fn(rows, cols, |i, j| self[(row0 + i, col0 + j)])
    }

    /// Pads into a larger zero matrix, occupying the top-left block.
    pub fn embed(&self, rows: usize, cols: usize) -> Self {
        assert!(rows >= self.rows && cols >= self.cols, "cannot embed into smaller matrix");
        let mut out = Self::zeros(rows, cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(i, j)] = self[(i, j)];
            }
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;

    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.cols + j]
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.cols, rhs.rows, "matrix product shape mismatch");
        let mut out = ComplexMatrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == ZERO {
                    continue;
                }
                let rhs_row = &rhs.data[k * rhs.cols..(k + 1) * rhs.cols];
                for (o, b) in out_row.iter_mut().zip(rhs_row) {
                    *o += a * b;
                }
            }
        }
        out
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "matrix sum shape mismatch");
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "matrix difference shape mismatch");
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                let z = self[(i, j)];
                write!(f, "{:+.4}{:+.4}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

/// Kronecker product; `(a ⊗ b)[i·rb + k, j·cb + l] = a[i,j]·b[k,l]`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    let overflow = || Error::Overflow {
        rows: a.rows.saturating_mul(b.rows),
        cols: a.cols.saturating_mul(b.cols),
        max: MAX_ENTRIES,
    };
    let rows = a.rows.checked_mul(b.rows).ok_or_else(overflow)?;
    let cols = a.cols.checked_mul(b.cols).ok_or_else(overflow)?;
    match rows.checked_mul(cols) {
        Some(n) if n <= MAX_ENTRIES => {}
        _ => return Err(overflow()),
    }
    let mut out = ComplexMatrix::zeros(rows, cols);
    for i in 0..a.rows {
        for j in 0..a.cols {
            let x = a[(i, j)];
            if x == ZERO {
                continue;
            }
            for k in 0..b.rows {
                for l in 0..b.cols {
                    out[(i * b.rows + k, j * b.cols + l)] = x * b[(k, l)];
                }
            }
        }
    }
    Ok(out)
}

/// Kronecker product of two vectors.
pub fn kron_vec(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(a.len() * b.len());
    for x in a {
        for y in b {
            out.push(x * y);
        }
    }
    out
}

fn check_dims(total: usize, dims: &[usize]) -> Result<()> {
    if dims.is_empty() || dims.contains(&0) {
        return Err(Error::Dimension(format!("invalid subsystem dimensions {dims:?}")));
    }
    let product = dims
        .iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .ok_or_else(|| Error::Dimension("subsystem dimensions overflow".into()))?;
    if product != total {
        return Err(Error::Dimension(format!(
            "subsystem dimensions {dims:?} multiply to {product}, matrix has {total}"
        )));
    }
    Ok(())
}

/// Reduced operator on the subsystems in `keep`; subsystem 0 is the most
/// significant tensor factor.
pub fn partial_trace(rho: &ComplexMatrix, dims: &[usize], keep: &[usize]) -> Result<ComplexMatrix> {
    if !rho.is_square() {
        return Err(Error::Dimension("partial trace of a non-square matrix".into()));
    }
    check_dims(rho.rows, dims)?;
    if keep.is_empty() {
        return Err(Error::InvalidArgument("no subsystems kept".into()));
    }
    let mut kept = vec![false; dims.len()];
    for &k in keep {
        if k >= dims.len() || kept[k] {
            return Err(Error::InvalidArgument(format!("bad subsystem list {keep:?}")));
        }
        kept[k] = true;
    }

    let n = rho.rows;
    let kept_dim: usize = dims.iter().zip(&kept).filter(|(_, &k)| k).map(|(d, _)| d).product();
    let traced_dim = n / kept_dim;

    // For every full index, its position within the kept and traced factors.
    let mut kept_idx = vec![0usize; n];
    let mut traced_idx = vec![0usize; n];
    for idx in 0..n {
        let mut rem = idx;
        let (mut kpos, mut tpos) = (0usize, 0usize);
        let (mut kstride, mut tstride) = (1usize, 1usize);
        for s in (0..dims.len()).rev() {
            let digit = rem % dims[s];
            rem /= dims[s];
            if kept[s] {
                kpos += digit * kstride;
                kstride *= dims[s];
            } else {
                tpos += digit * tstride;
                tstride *= dims[s];
            }
        }
        kept_idx[idx] = kpos;
        traced_idx[idx] = tpos;
    }
    let mut groups: Vec<Vec<usize>> = vec![Vec::with_capacity(kept_dim); traced_dim];
    for idx in 0..n {
        groups[traced_idx[idx]].push(idx);
    }

    let mut out = ComplexMatrix::zeros(kept_dim, kept_dim);
    for group in &groups {
        for &a in group {
            for &b in group {
                out[(kept_idx[a], kept_idx[b])] += rho[(a, b)];
            }
        }
    }
    Ok(out)
}

/// Left-multiplies `mat` by `I ⊗ op ⊗ I`, with `op` acting on subsystem `factor`.
pub fn apply_on_factor(
    mat: &ComplexMatrix,
    dims: &[usize],
    factor: usize,
    op: &ComplexMatrix,
) -> Result<ComplexMatrix> {
    check_dims(mat.rows, dims)?;
    let d = dims[factor];
    if op.rows != d || op.cols != d {
        return Err(Error::Dimension(format!(
            "local operator {}x{} on a factor of dimension {d}",
            op.rows, op.cols
        )));
    }
    let inner: usize = dims[factor + 1..].iter().product();
    let outer: usize = dims[..factor].iter().product();
    let mut out = ComplexMatrix::zeros(mat.rows, mat.cols);
    for o in 0..outer {
        for i in 0..inner {
            for a in 0..d {
                let row_out = (o * d + a) * inner + i;
                for b in 0..d {
                    let x = op[(a, b)];
                    if x == ZERO {
                        continue;
                    }
                    let row_in = (o * d + b) * inner + i;
                    for c in 0..mat.cols {
                        let v = mat.data[row_in * mat.cols + c];
                        out.data[row_out * mat.cols + c] += x * v;
                    }
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn pauli_x() -> ComplexMatrix {
        ComplexMatrix::new(2, 2, vec![c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)]).unwrap()
    }

    fn pauli_z() -> ComplexMatrix {
        ComplexMatrix::from_real_diagonal(&[1.0, -1.0])
    }

    #[test]
    fn rejects_bad_construction() {
        assert!(ComplexMatrix::new(2, 2, vec![c(0., 0.); 3]).is_err());
        assert!(ComplexMatrix::new(1, 1, vec![c(f64::NAN, 0.)]).is_err());
        assert!(ComplexMatrix::new(0, 1, vec![]).is_err());
    }

    #[test]
    fn kron_identities() {
        let k = kron(&ComplexMatrix::identity(2), &ComplexMatrix::identity(3)).unwrap();
        assert_eq!(k, ComplexMatrix::identity(6));

        let b = ComplexMatrix::from_fn(2, 3, |i, j| c(i as f64 + 0.5, j as f64 - 1.0));
        let k = kron(&ComplexMatrix::from_real_diagonal(&[2.0]), &b).unwrap();
        assert_eq!(k, b.scale_real(2.0));
    }

    #[test]
    fn kron_x_z_block_structure() {
        // X ⊗ Z = [[0, Z], [Z, 0]]
        let k = kron(&pauli_x(), &pauli_z()).unwrap();
        let z = pauli_z();
        let zero = ComplexMatrix::zeros(2, 2);
        assert_eq!(k.submatrix(0, 0, 2, 2), zero);
        assert_eq!(k.submatrix(2, 2, 2, 2), zero);
        assert_eq!(k.submatrix(0, 2, 2, 2), z);
        assert_eq!(k.submatrix(2, 0, 2, 2), z);
    }

    #[test]
    fn kron_overflow_is_reported() {
        let big = ComplexMatrix::zeros(1 << 13, 1);
        let err = kron(&big, &ComplexMatrix::zeros(1 << 14, 1)).unwrap_err();
        assert!(matches!(err, Error::Overflow { .. }));
    }

    #[test]
    fn partial_trace_of_product() {
        let a = ComplexMatrix::from_fn(2, 2, |i, j| c((i + 2 * j) as f64, i as f64 - j as f64));
        let b = ComplexMatrix::from_fn(3, 3, |i, j| c(1.0 + (i * j) as f64, 0.0));
        let ab = kron(&a, &b).unwrap();
        let ra = partial_trace(&ab, &[2, 3], &[0]).unwrap();
        assert!(ra.distance(&a.scale(b.trace())) < 1e-12);
        let rb = partial_trace(&ab, &[2, 3], &[1]).unwrap();
        assert!(rb.distance(&b.scale(a.trace())) < 1e-12);
        let all = partial_trace(&ab, &[2, 3], &[0, 1]).unwrap();
        assert_eq!(all, ab);
    }

    #[test]
    fn partial_trace_of_bell_state() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let bell = vec![c(s, 0.), c(0., 0.), c(0., 0.), c(s, 0.)];
        let rho = ComplexMatrix::projector(&bell);
        let r = partial_trace(&rho, &[2, 2], &[1]).unwrap();
        assert!(r.distance(&ComplexMatrix::identity(2).scale_real(0.5)) < 1e-15);
    }

    #[test]
    fn partial_trace_errors() {
        let rho = ComplexMatrix::identity(6);
        assert!(matches!(partial_trace(&rho, &[2, 2], &[0]), Err(Error::Dimension(_))));
        assert!(partial_trace(&rho, &[2, 3], &[2]).is_err());
        assert!(partial_trace(&rho, &[2, 3], &[]).is_err());
        assert!(partial_trace(&ComplexMatrix::zeros(2, 3), &[2], &[0]).is_err());
    }

    #[test]
    fn apply_on_factor_matches_kron() {
        let x = pauli_x();
        let z = pauli_z();
        let v = ComplexMatrix::from_fn(8, 2, |i, j| c(i as f64, j as f64 + 1.0));
        let full = kron(&kron(&ComplexMatrix::identity(2), &x).unwrap(), &ComplexMatrix::identity(2)).unwrap();
        let got = apply_on_factor(&v, &[2, 2, 2], 1, &x).unwrap();
        assert!(got.distance(&(&full * &v)) < 1e-14);
        let full_z = kron(&z, &ComplexMatrix::identity(4)).unwrap();
        let got = apply_on_factor(&v, &[2, 2, 2], 0, &z).unwrap();
        assert!(got.distance(&(&full_z * &v)) < 1e-14);
    }
}
