//! Dense complex matrices for small site algebras.
//!
//! Storage is row-major. Kronecker products put the left factor in the most
//! significant position, which matches the basis convention used for lattice
//! operators (site 1 is the most significant tensor leg).

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use num_traits::{Float, Zero};

use crate::error::{Error, Result};

/// Default largest matrix dimension handled by the dense norm path.
pub const DEFAULT_DENSE_CAP: usize = 1024;

/// Default largest dimension a Kronecker product may produce.
pub const DEFAULT_KRON_CAP: usize = 1 << 14;

/// A dense complex matrix with finite entries.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

/// Pauli matrices and the 2x2 identity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Pauli {
    Identity,
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn matrix(self) -> ComplexMatrix {
        pauli(self)
    }
}

/// The standard Pauli matrix: σ¹ = X, σ² = Y, σ³ = Z.
pub fn pauli(kind: Pauli) -> ComplexMatrix {
    let o = Complex64::new(0.0, 0.0);
    let l = Complex64::new(1.0, 0.0);
    let i = Complex64::new(0.0, 1.0);
    let data = match kind {
        Pauli::Identity => vec![l, o, o, l],
        Pauli::X => vec![o, l, l, o],
        Pauli::Y => vec![o, -i, i, o],
        Pauli::Z => vec![l, o, o, -l],
    };
    ComplexMatrix { rows: 2, cols: 2, data }
}

impl ComplexMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if rows == 0 || cols == 0 || data.len() != rows * cols {
            return Err(Error::ShapeMismatch {
                expected: format!("{rows}x{cols} with {} entries", rows * cols),
                found: format!("{} entries", data.len()),
            });
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from rows of entries.
    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self> {
        let n = rows.len();
        let m = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != m) {
            return Err(Error::ShapeMismatch {
                expected: format!("rows of length {m}"),
                found: "ragged rows".into(),
            });
        }
        Self::new(n, m, rows.iter().flatten().copied().collect())
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![Complex64::zero(); rows * cols] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim, dim);
        for i in 0..dim {
            m.data[i * dim + i] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn scalar(c: Complex64) -> Self {
        Self { rows: 1, cols: 1, data: vec![c] }
    }

    pub fn diagonal(entries: &[Complex64]) -> Self {
        let n = entries.len();
        let mut m = Self::zeros(n, n);
        for (i, &e) in entries.iter().enumerate() {
            m.data[i * n + i] = e;
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// Row-major entries.
    #[inline]
    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: Complex64) {
        self.data[i * self.cols + j] = value;
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i).conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&z| z * c).collect() }
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i)).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|z| z.re == 0.0 && z.im == 0.0)
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "shape mismatch");
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.is_square()
            && (0..self.rows).all(|i| (i..self.cols).all(|j| (self.get(i, j) - self.get(j, i).conj()).norm() <= tol))
    }

    fn is_skew_hermitian(&self, tol: f64) -> bool {
        self.is_square()
            && (0..self.rows).all(|i| (i..self.cols).all(|j| (self.get(i, j) + self.get(j, i).conj()).norm() <= tol))
    }

    /// Matrix product; panics on incompatible shapes.
    pub fn matmul(&self, other: &Self) -> Self {
        self.try_matmul(other).expect("incompatible matrix shapes")
    }

    pub fn try_matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::ShapeMismatch {
                expected: format!("{} rows", self.cols),
                found: format!("{} rows", other.rows),
            });
        }
        let (n, k, m) = (self.rows, self.cols, other.cols);
        let mut out = vec![Complex64::zero(); n * m];
        for i in 0..n {
            let row = &mut out[i * m..(i + 1) * m];
            for t in 0..k {
                let a = self.data[i * k + t];
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                let brow = &other.data[t * m..(t + 1) * m];
                for (o, &b) in row.iter_mut().zip(brow) {
                    *o += a * b;
                }
            }
        }
        Ok(Self { rows: n, cols: m, data: out })
    }

    /// Matrix-vector product into `out`.
    pub fn apply_into(&self, x: &[Complex64], out: &mut [Complex64]) {
        debug_assert_eq!(x.len(), self.cols);
        debug_assert_eq!(out.len(), self.rows);
        for (i, o) in out.iter_mut().enumerate() {
            let row = &self.data[i * self.cols..(i + 1) * self.cols];
            *o = row.iter().zip(x).map(|(a, b)| a * b).sum();
        }
    }

    fn zip_with(&self, other: &Self, f: impl Fn(Complex64, Complex64) -> Complex64) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "shape mismatch");
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    /// Commutator `self·other − other·self`.
    pub fn commutator(&self, other: &Self) -> Self {
        &self.matmul(other) - &other.matmul(self)
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: Self) -> ComplexMatrix {
        self.zip_with(rhs, |a, b| a + b)
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: Self) -> ComplexMatrix {
        self.zip_with(rhs, |a, b| a - b)
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: Self) -> ComplexMatrix {
        self.matmul(rhs)
    }
}

impl Neg for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn neg(self) -> ComplexMatrix {
        self.scale(Complex64::new(-1.0, 0.0))
    }
}

/// Kronecker product with the default dimension cap.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    kron_capped(a, b, DEFAULT_KRON_CAP)
}

/// Kronecker product `a ⊗ b`; block `(i, j)` of the result is `a[i, j]·b`.
pub fn kron_capped(a: &ComplexMatrix, b: &ComplexMatrix, cap: usize) -> Result<ComplexMatrix> {
    let rows = a.rows.checked_mul(b.rows).ok_or(Error::Capacity { dim: usize::MAX, cap })?;
    let cols = a.cols.checked_mul(b.cols).ok_or(Error::Capacity { dim: usize::MAX, cap })?;
    if rows.max(cols) > cap {
        return Err(Error::Capacity { dim: rows.max(cols), cap });
    }
    let mut data = Vec::with_capacity(rows * cols);
    for ai in 0..a.rows {
        for bi in 0..b.rows {
            for aj in 0..a.cols {
                let x = a.get(ai, aj);
                data.extend(b.data[bi * b.cols..(bi + 1) * b.cols].iter().map(|&y| x * y));
            }
        }
    }
    Ok(ComplexMatrix { rows, cols, data })
}

/// Left fold of [`kron`] over `factors`; the empty product is the 1x1 identity.
pub fn kron_all<'a>(factors: impl IntoIterator<Item = &'a ComplexMatrix>, cap: usize) -> Result<ComplexMatrix> {
    factors
        .into_iter()
        .try_fold(ComplexMatrix::identity(1), |acc, f| kron_capped(&acc, f, cap))
}

fn to_nalgebra(a: &ComplexMatrix) -> nalgebra::DMatrix<Complex64> {
    nalgebra::DMatrix::from_row_slice(a.rows, a.cols, &a.data)
}

/// Eigenvalues of a Hermitian matrix (only the lower triangle is read).
pub fn hermitian_eigenvalues(a: &ComplexMatrix) -> Vec<f64> {
    to_nalgebra(a).symmetric_eigenvalues().iter().copied().collect()
}

/// Operator norm (largest singular value) of a square matrix of dimension at most `cap`.
pub fn operator_norm_dense(a: &ComplexMatrix, cap: usize) -> Result<f64> {
    if !a.is_square() {
        return Err(Error::NotSquare { rows: a.rows, cols: a.cols });
    }
    if a.rows > cap {
        return Err(Error::Capacity { dim: a.rows, cap });
    }
    let scale = a.max_abs();
    if scale == 0.0 {
        return Ok(0.0);
    }
    let tol = 1e-14 * scale;
    let spectral_radius = |m: &ComplexMatrix| hermitian_eigenvalues(m).into_iter().map(f64::abs).fold(0.0, f64::max);
    if a.is_hermitian(tol) {
        return Ok(spectral_radius(a));
    }
    if a.is_skew_hermitian(tol) {
        return Ok(spectral_radius(&a.scale(Complex64::new(0.0, 1.0))));
    }
    let gram = a.adjoint().matmul(a);
    let top = hermitian_eigenvalues(&gram).into_iter().fold(0.0, f64::max);
    Ok(Float::sqrt(top.max(0.0)))
}
