//! Dense complex linear algebra for small density matrices.
//!
//! Everything here works on square row-major matrices of dimension at most a
//! few hundred. The Hermitian eigensolver is a cyclic complex Jacobi method,
//! which converges for every Hermitian input and gives eigenvectors that are
//! orthonormal to working precision.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Result, TomoError};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Tolerance used by [`hermitian_eig`] to reject non-Hermitian input.
pub const HERMITIAN_TOL: f64 = 1e-8;

/// Square complex matrix stored row-major.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    dim: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 1, "matrix dimension must be positive");
        Self {
            dim,
            data: vec![ZERO; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    /// Builds a matrix from a flat row-major buffer of length `dim * dim`.
    pub fn from_row_major(dim: usize, data: Vec<C64>) -> Result<Self> {
        if dim == 0 || data.len() != dim * dim {
            return Err(TomoError::DimensionMismatch {
                expected: dim * dim,
                found: data.len(),
            });
        }
        Ok(Self { dim, data })
    }

    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let dim = rows.len();
        let mut data = Vec::with_capacity(dim * dim);
        for row in rows {
            if row.len() != dim {
                return Err(TomoError::DimensionMismatch {
                    expected: dim,
                    found: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Self::from_row_major(dim, data)
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = C64::new(d, 0.0);
        }
        m
    }

    /// The projector `|v><v|` (not normalized).
    pub fn outer(v: &[C64]) -> Self {
        Self::from_fn(v.len(), |i, j| v[i] * v[j].conj())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self[(j, i)])
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|&z| z * s).collect(),
        }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(C64::new(s, 0.0))
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Largest entrywise modulus of `self - self^dagger`.
    pub fn hermiticity_error(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.dim {
            for j in i..self.dim {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_error() <= tol
    }

    /// Squared Frobenius norm, `Tr(m^dagger m)`.
    pub fn norm_sqr(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        check_dims(self, other)?;
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a == ZERO {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * other.data[k * n + j];
                }
            }
        }
        Ok(out)
    }

    /// Matrix-vector product.
    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(v.len(), self.dim, "dimension mismatch");
        (0..self.dim)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }
}

impl AsRef<ComplexMatrix> for ComplexMatrix {
    fn as_ref(&self) -> &ComplexMatrix {
        self
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;

    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.dim + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.dim + j]
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix({}x{}) [", self.dim, self.dim)?;
        for i in 0..self.dim {
            write!(f, " ")?;
            for z in self.row(i) {
                write!(f, " {:+.6}{:+.6}i", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        ComplexMatrix {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        ComplexMatrix {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;

    /// Panics on dimension mismatch; use [`ComplexMatrix::matmul`] for a checked product.
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.matmul(rhs).expect("dimension mismatch")
    }
}

fn check_dims(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<()> {
    if a.dim != b.dim {
        return Err(TomoError::DimensionMismatch {
            expected: a.dim,
            found: b.dim,
        });
    }
    Ok(())
}

/// Kronecker product: entry `(i*b.dim + k, j*b.dim + l)` is `a[i,j] * b[k,l]`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let (na, nb) = (a.dim, b.dim);
    let mut out = ComplexMatrix::zeros(na * nb);
    for i in 0..na {
        for j in 0..na {
            let aij = a[(i, j)];
            if aij == ZERO {
                continue;
            }
            for k in 0..nb {
                for l in 0..nb {
                    out[(i * nb + k, j * nb + l)] = aij * b[(k, l)];
                }
            }
        }
    }
    out
}

/// `Tr(a b)` computed without forming the product.
pub fn trace_product(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<C64> {
    check_dims(a, b)?;
    let n = a.dim;
    let mut acc = ZERO;
    for i in 0..n {
        for j in 0..n {
            acc += a.data[i * n + j] * b.data[j * n + i];
        }
    }
    Ok(acc)
}

/// Transposes the indices of one qubit. Qubit 0 is the most significant bit
/// of the basis index.
pub fn partial_transpose(
    rho: &ComplexMatrix,
    n_qubits: usize,
    subsystem: usize,
) -> Result<ComplexMatrix> {
    let expected = 1usize << n_qubits;
    if rho.dim != expected {
        return Err(TomoError::DimensionMismatch {
            expected,
            found: rho.dim,
        });
    }
    if subsystem >= n_qubits {
        return Err(TomoError::InvalidArgument(format!(
            "subsystem {subsystem} out of range for {n_qubits} qubits"
        )));
    }
    let mask = 1usize << (n_qubits - 1 - subsystem);
    let mut out = ComplexMatrix::zeros(rho.dim);
    for r in 0..rho.dim {
        for c in 0..rho.dim {
            let r2 = (r & !mask) | (c & mask);
            let c2 = (c & !mask) | (r & mask);
            out[(r2, c2)] = rho[(r, c)];
        }
    }
    Ok(out)
}

/// Eigendecomposition of a Hermitian matrix.
#[derive(Clone, Debug)]
pub struct Spectrum {
    /// Sorted descending.
    pub eigenvalues: Vec<f64>,
    /// Column `k` is the eigenvector for `eigenvalues[k]`.
    pub eigenvectors: ComplexMatrix,
}

impl Spectrum {
    pub fn min(&self) -> f64 {
        *self.eigenvalues.last().expect("spectrum is never empty")
    }

    pub fn max(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn eigenvector(&self, k: usize) -> Vec<C64> {
        let n = self.eigenvectors.dim();
        (0..n).map(|i| self.eigenvectors[(i, k)]).collect()
    }

    /// `V diag(lambda) V^dagger`.
    pub fn reconstruct(&self) -> ComplexMatrix {
        let v = &self.eigenvectors;
        let n = v.dim();
        ComplexMatrix::from_fn(n, |i, j| {
            (0..n)
                .map(|k| v[(i, k)] * v[(j, k)].conj() * self.eigenvalues[k])
                .sum()
        })
    }
}

const JACOBI_MAX_SWEEPS: usize = 100;
const TIE_TOL: f64 = 1e-12;

/// Eigenvalues and orthonormal eigenvectors of a Hermitian matrix.
///
/// Fails with [`TomoError::NotHermitian`] when any entry of `m - m^dagger`
/// exceeds [`HERMITIAN_TOL`]. Eigenvalues are sorted descending; within a
/// degenerate cluster the eigenvectors (phase-fixed so that their first
/// significant component is real positive) are ordered lexicographically.
pub fn hermitian_eig(m: &ComplexMatrix) -> Result<Spectrum> {
    let deviation = m.hermiticity_error();
    if deviation > HERMITIAN_TOL {
        return Err(TomoError::NotHermitian { deviation });
    }
    let n = m.dim;
    // symmetrize so that rounding in the input does not leak into the sweep
    let mut a = ComplexMatrix::from_fn(n, |i, j| 0.5 * (m[(i, j)] + m[(j, i)].conj()));
    let mut v = ComplexMatrix::identity(n);

    let scale = a.norm_sqr().sqrt();
    // entries below this are treated as converged and flushed to zero
    let floor = 1e-17 * scale;
    if scale > 0.0 {
        for _ in 0..JACOBI_MAX_SWEEPS {
            let mut rotated = false;
            for p in 0..n {
                for q in p + 1..n {
                    rotated |= jacobi_rotate(&mut a, &mut v, p, q, floor);
                }
            }
            if !rotated {
                break;
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| a[(y, y)].re.total_cmp(&a[(x, x)].re));
    let eigenvalues: Vec<f64> = order.iter().map(|&k| a[(k, k)].re).collect();
    let mut vectors: Vec<Vec<C64>> = order
        .iter()
        .map(|&k| fix_phase((0..n).map(|i| v[(i, k)]).collect()))
        .collect();

    // lexicographic tie-break inside clusters of (numerically) equal eigenvalues
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && (eigenvalues[end - 1] - eigenvalues[end]).abs() <= TIE_TOL * scale.max(1.0)
        {
            end += 1;
        }
        if end - start > 1 {
            vectors[start..end].sort_by(|x, y| lex_cmp(y, x));
        }
        start = end;
    }

    let eigenvectors = ComplexMatrix::from_fn(n, |i, k| vectors[k][i]);
    Ok(Spectrum {
        eigenvalues,
        eigenvectors,
    })
}

/// Convenience wrapper returning only the sorted eigenvalues.
pub fn eigenvalues(m: &ComplexMatrix) -> Result<Vec<f64>> {
    hermitian_eig(m).map(|s| s.eigenvalues)
}

/// Zeroes `a[p,q]` with a unitary rotation in the (p,q) plane and accumulates
/// the rotation into `v`.
fn jacobi_rotate(
    a: &mut ComplexMatrix,
    v: &mut ComplexMatrix,
    p: usize,
    q: usize,
    floor: f64,
) -> bool {
    let apq = a[(p, q)];
    let mag = apq.norm();
    if mag <= floor {
        a[(p, q)] = ZERO;
        a[(q, p)] = ZERO;
        return false;
    }
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;
    // phase making the pivot real, then a real symmetric rotation
    let phase = apq.conj() / mag;
    let theta = (aqq - app) / (2.0 * mag);
    let t = if theta.is_infinite() {
        0.0
    } else {
        theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
    };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;

    // G restricted to (p,q): columns [c, -s*phase]^T and [s, c*phase]^T
    let g_pp = C64::new(c, 0.0);
    let g_qp = phase * (-s);
    let g_pq = C64::new(s, 0.0);
    let g_qq = phase * c;

    let n = a.dim;
    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = akp * g_pp + akq * g_qp;
        a[(k, q)] = akp * g_pq + akq * g_qq;
    }
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = g_pp.conj() * apk + g_qp.conj() * aqk;
        a[(q, k)] = g_pq.conj() * apk + g_qq.conj() * aqk;
    }
    a[(p, q)] = ZERO;
    a[(q, p)] = ZERO;
    a[(p, p)] = C64::new(a[(p, p)].re, 0.0);
    a[(q, q)] = C64::new(a[(q, q)].re, 0.0);

    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * g_pp + vkq * g_qp;
        v[(k, q)] = vkp * g_pq + vkq * g_qq;
    }
    true
}

fn fix_phase(mut vec: Vec<C64>) -> Vec<C64> {
    if let Some(pivot) = vec.iter().copied().find(|z| z.norm() > 1e-10) {
        let rot = pivot.conj() / pivot.norm();
        for z in &mut vec {
            *z *= rot;
        }
    }
    vec
}

fn lex_cmp(x: &[C64], y: &[C64]) -> std::cmp::Ordering {
    for (a, b) in x.iter().zip(y) {
        let ord = a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im));
        if ord != std::cmp::Ordering::Equal {
            return ord;
        }
    }
    std::cmp::Ordering::Equal
}

/// Solves `a x = b` for a real symmetric positive-definite `a` (row-major,
/// `n x n`) by Cholesky factorization. Returns `None` if a pivot is not
/// strictly positive.
pub fn solve_spd(a: &[f64], b: &[f64]) -> Option<Vec<f64>> {
    let n = b.len();
    debug_assert_eq!(a.len(), n * n);
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a[i * n + j];
            for k in 0..j {
                sum -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if sum <= 0.0 || !sum.is_finite() {
                    return None;
                }
                l[i * n + i] = sum.sqrt();
            } else {
                l[i * n + j] = sum / l[j * n + j];
            }
        }
    }
    let mut y = vec![0.0; n];
    for i in 0..n {
        let mut sum = b[i];
        for k in 0..i {
            sum -= l[i * n + k] * y[k];
        }
        y[i] = sum / l[i * n + i];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut sum = y[i];
        for k in i + 1..n {
            sum -= l[k * n + i] * x[k];
        }
        x[i] = sum / l[i * n + i];
    }
    Some(x)
}
