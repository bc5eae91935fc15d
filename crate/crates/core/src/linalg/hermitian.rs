use std::ops::Deref;

use super::matrix::Matrix;
use crate::error::{Error, Result};

/// Relative asymmetry accepted by [`HermitianMatrix::new`] before the input
/// is rejected instead of symmetrized.
pub const HERMITIAN_INPUT_TOL: f64 = 1e-8;

/// Square matrix stored as its Hermitian part.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianMatrix(Matrix);

impl HermitianMatrix {
    /// Validates near-Hermitian input and stores `(M + M^*)/2`.
    pub fn new(m: Matrix) -> Result<Self> {
        m.check_square("Hermitian matrix")?;
        let asymmetry = (&m - m.adjoint()).frobenius_norm();
        if asymmetry > HERMITIAN_INPUT_TOL * m.frobenius_norm().max(1.0) {
            return Err(Error::NotHermitian { asymmetry });
        }
        Ok(Self(m.hermitian_part()))
    }

    /// Takes the Hermitian part without any asymmetry check. Used to
    /// re-symmetrize iterates that are Hermitian in exact arithmetic.
    pub fn from_hermitian_part(m: &Matrix) -> Self {
        debug_assert!(m.is_square());
        Self(m.hermitian_part())
    }

    pub fn zeros(n: usize) -> Self {
        Self(Matrix::zeros(n, n))
    }

    pub fn identity(n: usize) -> Self {
        Self(Matrix::identity(n))
    }

    pub fn from_real_diagonal(d: &[f64]) -> Self {
        Self(Matrix::from_real_diagonal(d))
    }

    pub fn size(&self) -> usize {
        self.0.rows()
    }

    pub fn as_matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix {
        self.0
    }

    /// `C^* C`.
    pub fn gram(c: &Matrix) -> Self {
        Self::from_hermitian_part(&(c.adjoint() * c))
    }
}

impl Deref for HermitianMatrix {
    type Target = Matrix;
    fn deref(&self) -> &Matrix {
        &self.0
    }
}

impl From<HermitianMatrix> for Matrix {
    fn from(h: HermitianMatrix) -> Matrix {
        h.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::C64;

    #[test]
    fn symmetrizes_small_asymmetry() {
        let m = Matrix::from_real_rows(&[&[1.0, 2.0 + 1e-12], &[2.0, 3.0]]).unwrap();
        let h = HermitianMatrix::new(m).unwrap();
        assert_eq!(h.get(0, 1), h.get(1, 0).conj());
        let asym = (h.as_matrix() - h.adjoint()).frobenius_norm();
        assert!(asym <= 1e-12 * h.frobenius_norm().max(1.0));
    }

    #[test]
    fn rejects_nonhermitian() {
        let m = Matrix::from_real_rows(&[&[1.0, 2.0], &[0.0, 3.0]]).unwrap();
        assert!(matches!(HermitianMatrix::new(m), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn hermitian_diagonal_is_real() {
        let m = Matrix::from_diagonal(&[C64::new(1.0, 1e-13)]);
        let h = HermitianMatrix::new(m).unwrap();
        assert_eq!(h.get(0, 0).im, 0.0);
    }
}
