use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Dense complex matrix.
///
/// All solvers work in complex arithmetic, real inputs simply carry zero
/// imaginary parts. Entries are finite on construction.
#[derive(Clone, PartialEq)]
pub struct Matrix {
    data: DMatrix<C64>,
}

impl Matrix {
    /// Builds a matrix from row-major entries.
    pub fn new(rows: usize, cols: usize, entries: Vec<C64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::DimensionMismatch(format!(
                "matrix must be nonempty, got {rows}x{cols}"
            )));
        }
        if entries.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                entries.len()
            )));
        }
        if let Some(k) = entries.iter().position(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite {
                row: k / cols,
                col: k % cols,
            });
        }
        Ok(Self {
            data: DMatrix::from_row_slice(rows, cols, &entries),
        })
    }

    /// Builds a matrix from real rows. Panics on ragged input.
    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        let entries = rows
            .iter()
            .flat_map(|row| row.iter().map(|&x| C64::new(x, 0.0)))
            .collect();
        Self::new(r, c, entries)
    }

    pub fn from_complex_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::DimensionMismatch("ragged rows".into()));
        }
        Self::new(r, c, rows.iter().flatten().copied().collect())
    }

    pub(crate) fn from_inner(data: DMatrix<C64>) -> Self {
        Self { data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            data: DMatrix::zeros(rows, cols),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            data: DMatrix::identity(n, n),
        }
    }

    pub fn scalar(z: C64) -> Self {
        Self {
            data: DMatrix::from_element(1, 1, z),
        }
    }

    pub fn from_real_diagonal(d: &[f64]) -> Self {
        let n = d.len();
        let mut m = Self::zeros(n, n);
        for (i, &x) in d.iter().enumerate() {
            m.data[(i, i)] = C64::new(x, 0.0);
        }
        m
    }

    pub fn from_diagonal(d: &[C64]) -> Self {
        let n = d.len();
        let mut m = Self::zeros(n, n);
        for (i, &z) in d.iter().enumerate() {
            m.data[(i, i)] = z;
        }
        m
    }

    pub fn inner(&self) -> &DMatrix<C64> {
        &self.data
    }

    pub fn into_inner(self) -> DMatrix<C64> {
        self.data
    }

    pub fn rows(&self) -> usize {
        self.data.nrows()
    }

    pub fn cols(&self) -> usize {
        self.data.ncols()
    }

    pub fn is_square(&self) -> bool {
        self.rows() == self.cols()
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.data[(i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, z: C64) {
        self.data[(i, j)] = z;
    }

    /// Row-major copy of the entries.
    pub fn to_row_major(&self) -> Vec<C64> {
        let mut out = Vec::with_capacity(self.rows() * self.cols());
        for i in 0..self.rows() {
            for j in 0..self.cols() {
                out.push(self.data[(i, j)]);
            }
        }
        out
    }

    pub fn to_rows(&self) -> Vec<Vec<C64>> {
        (0..self.rows())
            .map(|i| (0..self.cols()).map(|j| self.data[(i, j)]).collect())
            .collect()
    }

    pub fn adjoint(&self) -> Self {
        Self {
            data: self.data.adjoint(),
        }
    }

    pub fn transpose(&self) -> Self {
        Self {
            data: self.data.transpose(),
        }
    }

    pub fn scale(&self, alpha: C64) -> Self {
        Self {
            data: &self.data * alpha,
        }
    }

    pub fn scale_real(&self, alpha: f64) -> Self {
        self.scale(C64::new(alpha, 0.0))
    }

    /// `self + alpha * I`.
    pub fn shift_diagonal(&self, alpha: C64) -> Self {
        let mut out = self.clone();
        for i in 0..self.rows().min(self.cols()) {
            out.data[(i, i)] += alpha;
        }
        out
    }

    pub fn frobenius_norm(&self) -> f64 {
        frobenius_norm(self)
    }

    pub fn trace(&self) -> C64 {
        self.data.trace()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Hermitian part `(M + M^*)/2`.
    pub fn hermitian_part(&self) -> Self {
        Self {
            data: (&self.data + self.data.adjoint()) * C64::new(0.5, 0.0),
        }
    }

    pub fn block(&self, r0: usize, c0: usize, nr: usize, nc: usize) -> Self {
        Self {
            data: self.data.view((r0, c0), (nr, nc)).into_owned(),
        }
    }

    pub fn set_block(&mut self, r0: usize, c0: usize, b: &Matrix) {
        self.data
            .view_mut((r0, c0), (b.rows(), b.cols()))
            .copy_from(&b.data);
    }

    /// Assembles `[a b; c d]`.
    pub fn from_blocks(a: &Matrix, b: &Matrix, c: &Matrix, d: &Matrix) -> Result<Self> {
        if a.rows() != b.rows() || c.rows() != d.rows() || a.cols() != c.cols() || b.cols() != d.cols() {
            return Err(Error::DimensionMismatch("incompatible 2x2 block layout".into()));
        }
        let mut out = Self::zeros(a.rows() + c.rows(), a.cols() + b.cols());
        out.set_block(0, 0, a);
        out.set_block(0, a.cols(), b);
        out.set_block(a.rows(), 0, c);
        out.set_block(a.rows(), a.cols(), d);
        Ok(out)
    }

    /// Horizontal concatenation.
    pub fn hstack(parts: &[&Matrix]) -> Result<Self> {
        let rows = parts
            .first()
            .map(|m| m.rows())
            .ok_or_else(|| Error::DimensionMismatch("nothing to stack".into()))?;
        if parts.iter().any(|m| m.rows() != rows) {
            return Err(Error::DimensionMismatch("hstack row mismatch".into()));
        }
        let cols = parts.iter().map(|m| m.cols()).sum();
        let mut out = Self::zeros(rows, cols);
        let mut c = 0;
        for m in parts {
            out.set_block(0, c, m);
            c += m.cols();
        }
        Ok(out)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub(crate) fn check_square(&self, what: &str) -> Result<usize> {
        if self.is_square() {
            Ok(self.rows())
        } else {
            Err(Error::DimensionMismatch(format!(
                "{what} must be square, got {}x{}",
                self.rows(),
                self.cols()
            )))
        }
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows(), self.cols())?;
        for i in 0..self.rows() {
            write!(f, "  ")?;
            for j in 0..self.cols() {
                let z = self.data[(i, j)];
                write!(f, "{:>10.4}{:+.4}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

/// Square root of the sum of squared moduli.
pub fn frobenius_norm(m: &Matrix) -> f64 {
    // scaled accumulation so huge or tiny entries do not overflow
    let scale = m.max_abs();
    if scale == 0.0 || !scale.is_finite() {
        return scale;
    }
    let s: f64 = m.data.iter().map(|z| (z.norm() / scale).powi(2)).sum();
    scale * s.sqrt()
}

macro_rules! binop {
    ($tr:ident, $f:ident, $op:tt) => {
        impl $tr<&Matrix> for &Matrix {
            type Output = Matrix;
            fn $f(self, rhs: &Matrix) -> Matrix {
                Matrix { data: &self.data $op &rhs.data }
            }
        }
        impl $tr<Matrix> for Matrix {
            type Output = Matrix;
            fn $f(self, rhs: Matrix) -> Matrix {
                Matrix { data: &self.data $op &rhs.data }
            }
        }
        impl $tr<&Matrix> for Matrix {
            type Output = Matrix;
            fn $f(self, rhs: &Matrix) -> Matrix {
                Matrix { data: &self.data $op &rhs.data }
            }
        }
        impl $tr<Matrix> for &Matrix {
            type Output = Matrix;
            fn $f(self, rhs: Matrix) -> Matrix {
                Matrix { data: &self.data $op &rhs.data }
            }
        }
    };
}

binop!(Add, add, +);
binop!(Sub, sub, -);
binop!(Mul, mul, *);

impl AddAssign<&Matrix> for Matrix {
    fn add_assign(&mut self, rhs: &Matrix) {
        self.data += &rhs.data;
    }
}

impl Neg for &Matrix {
    type Output = Matrix;
    fn neg(self) -> Matrix {
        Matrix { data: -&self.data }
    }
}

impl Neg for Matrix {
    type Output = Matrix;
    fn neg(self) -> Matrix {
        Matrix { data: -self.data }
    }
}
