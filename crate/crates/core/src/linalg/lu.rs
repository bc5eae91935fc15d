use nalgebra::DMatrix;

use super::matrix::{Matrix, C64};
use crate::error::{Error, Result};

/// Pivots below `SINGULAR_RTOL * ‖M‖_F` mark the matrix as singular.
pub const SINGULAR_RTOL: f64 = 1e-14;

/// Row-pivoted LU factorization `P M = L U`.
#[derive(Clone, Debug)]
pub struct Lu {
    lu: DMatrix<C64>,
    // row i of P M is row perm[i] of M
    perm: Vec<usize>,
    min_pivot: f64,
}

impl Lu {
    pub fn new(m: &Matrix) -> Result<Self> {
        let threshold = SINGULAR_RTOL * m.frobenius_norm();
        Self::with_threshold(m, threshold)
    }

    /// Factorizes with an absolute pivot threshold.
    pub fn with_threshold(m: &Matrix, threshold: f64) -> Result<Self> {
        let n = m.check_square("LU input")?;
        let mut lu = m.inner().clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut min_pivot = f64::INFINITY;

        for k in 0..n {
            let (p, pmax) = (k..n)
                .map(|i| (i, lu[(i, k)].norm()))
                .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if pmax == 0.0 || pmax < threshold {
                return Err(Error::SingularMatrix {
                    pivot: pmax,
                    threshold,
                });
            }
            min_pivot = min_pivot.min(pmax);
            if p != k {
                lu.swap_rows(p, k);
                perm.swap(p, k);
            }
            let pivot = lu[(k, k)];
            for i in (k + 1)..n {
                lu[(i, k)] /= pivot;
            }
            for j in (k + 1)..n {
                let ukj = lu[(k, j)];
                if ukj == C64::new(0.0, 0.0) {
                    continue;
                }
                for i in (k + 1)..n {
                    let lik = lu[(i, k)];
                    lu[(i, j)] -= lik * ukj;
                }
            }
        }
        Ok(Self { lu, perm, min_pivot })
    }

    pub fn size(&self) -> usize {
        self.lu.nrows()
    }

    /// Smallest pivot modulus encountered.
    pub fn min_pivot(&self) -> f64 {
        self.min_pivot
    }

    /// `log |det M|` as the sum of log-moduli of the pivots.
    pub fn log_abs_det(&self) -> f64 {
        (0..self.size()).map(|i| self.lu[(i, i)].norm().ln()).sum()
    }

    /// Solves `M X = B`.
    pub fn solve(&self, b: &Matrix) -> Result<Matrix> {
        let n = self.size();
        if b.rows() != n {
            return Err(Error::DimensionMismatch(format!(
                "right-hand side has {} rows, system has {n}",
                b.rows()
            )));
        }
        let bi = b.inner();
        let mut x = DMatrix::zeros(n, b.cols());
        for c in 0..b.cols() {
            for i in 0..n {
                x[(i, c)] = bi[(self.perm[i], c)];
            }
            // forward, unit lower
            for k in 0..n {
                let xk = x[(k, c)];
                if xk == C64::new(0.0, 0.0) {
                    continue;
                }
                for i in (k + 1)..n {
                    x[(i, c)] -= self.lu[(i, k)] * xk;
                }
            }
            // backward, upper
            for k in (0..n).rev() {
                x[(k, c)] /= self.lu[(k, k)];
                let xk = x[(k, c)];
                for i in 0..k {
                    x[(i, c)] -= self.lu[(i, k)] * xk;
                }
            }
        }
        Ok(Matrix::from_inner(x))
    }

    /// Solves `M^* X = B` with the same factorization.
    pub fn solve_adjoint(&self, b: &Matrix) -> Result<Matrix> {
        let n = self.size();
        if b.rows() != n {
            return Err(Error::DimensionMismatch(format!(
                "right-hand side has {} rows, system has {n}",
                b.rows()
            )));
        }
        let bi = b.inner();
        let mut out = DMatrix::zeros(n, b.cols());
        let mut z = vec![C64::new(0.0, 0.0); n];
        for c in 0..b.cols() {
            for i in 0..n {
                z[i] = bi[(i, c)];
            }
            // U^* is lower triangular
            for i in 0..n {
                let mut s = z[i];
                for k in 0..i {
                    s -= self.lu[(k, i)].conj() * z[k];
                }
                z[i] = s / self.lu[(i, i)].conj();
            }
            // L^* is unit upper triangular
            for i in (0..n).rev() {
                let mut s = z[i];
                for k in (i + 1)..n {
                    s -= self.lu[(k, i)].conj() * z[k];
                }
                z[i] = s;
            }
            for i in 0..n {
                out[(self.perm[i], c)] = z[i];
            }
        }
        Ok(Matrix::from_inner(out))
    }

    /// Solves `X M = B`.
    pub fn solve_right(&self, b: &Matrix) -> Result<Matrix> {
        Ok(self.solve_adjoint(&b.adjoint())?.adjoint())
    }

    pub fn inverse(&self) -> Matrix {
        self.solve(&Matrix::identity(self.size()))
            .expect("identity has matching size")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mat(rows: &[&[f64]]) -> Matrix {
        Matrix::from_real_rows(rows).unwrap()
    }

    #[test]
    fn solves_and_solves_adjoint() {
        let m = Matrix::from_complex_rows(&[
            vec![C64::new(0.0, 1.0), C64::new(2.0, 0.0), C64::new(1.0, -1.0)],
            vec![C64::new(3.0, 0.0), C64::new(-1.0, 0.5), C64::new(0.0, 0.0)],
            vec![C64::new(1.0, 0.0), C64::new(1.0, 1.0), C64::new(4.0, 0.0)],
        ])
        .unwrap();
        let b = mat(&[&[1.0, 0.0], &[2.0, 1.0], &[3.0, -1.0]]);
        let lu = Lu::new(&m).unwrap();
        let x = lu.solve(&b).unwrap();
        assert!((&m * &x - &b).frobenius_norm() < 1e-13);
        let y = lu.solve_adjoint(&b).unwrap();
        assert!((m.adjoint() * &y - &b).frobenius_norm() < 1e-13);
        let w = lu.solve_right(&b.adjoint()).unwrap();
        assert!((&w * &m - b.adjoint()).frobenius_norm() < 1e-13);
    }

    #[test]
    fn log_det_matches_hand_value() {
        let m = mat(&[&[-1.0, 0.0, 0.0, 0.0], &[0.0, 1.0, 0.0, 0.0], &[0.0, 0.0, -4.0, 0.0], &[0.0, 0.0, 0.0, 4.0]]);
        let lu = Lu::new(&m).unwrap();
        assert!((lu.log_abs_det() - 16f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn rank_deficient_is_singular() {
        let m = mat(&[&[1.0, 1.0], &[1.0, 1.0]]);
        assert!(matches!(Lu::new(&m), Err(Error::SingularMatrix { .. })));
        assert!(matches!(Lu::new(&Matrix::zeros(2, 2)), Err(Error::SingularMatrix { .. })));
    }
}
