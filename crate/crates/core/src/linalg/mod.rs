//! Dense complex matrices and the handful of kernels the solvers share:
//! pivoted linear solves, norms, a semidefiniteness test and a spectral
//! radius bound from norms of repeated squares.

mod hermitian;
mod lu;
mod matrix;

pub use hermitian::{HermitianMatrix, HERMITIAN_INPUT_TOL};
pub use lu::{Lu, SINGULAR_RTOL};
pub use matrix::{frobenius_norm, Matrix, C64};

use crate::error::{Error, Result};

/// Solves `M X = B` by row-pivoted elimination.
pub fn solve_linear(m: &Matrix, b: &Matrix) -> Result<Matrix> {
    m.check_square("system matrix")?;
    if b.rows() != m.rows() {
        return Err(Error::DimensionMismatch(format!(
            "right-hand side has {} rows, system has {}",
            b.rows(),
            m.rows()
        )));
    }
    Lu::new(m)?.solve(b)
}

/// True iff the smallest eigenvalue of `m` is at least `-tol * max(1, ‖m‖_F)`.
///
/// Decided by attempting a Cholesky factorization of the shifted matrix
/// `m + (tol·s + δ) I`, where `s = max(1, ‖m‖_F)` and `δ` is a few ulps of
/// `s` so that exactly semidefinite input is accepted at `tol = 0`.
pub fn psd_check(m: &HermitianMatrix, tol: f64) -> bool {
    let n = m.size();
    let s = m.frobenius_norm().max(1.0);
    let slack = 8.0 * (n as f64) * f64::EPSILON * s;
    let shifted = m.shift_diagonal(C64::new(tol * s + slack, 0.0));
    cholesky_succeeds(&shifted)
}

fn cholesky_succeeds(m: &Matrix) -> bool {
    let n = m.rows();
    let mut l = m.inner().clone();
    for j in 0..n {
        let mut d = l[(j, j)].re;
        for k in 0..j {
            d -= l[(j, k)].norm_sqr();
        }
        if !(d > 0.0) {
            return false;
        }
        let d = d.sqrt();
        l[(j, j)] = C64::new(d, 0.0);
        for i in (j + 1)..n {
            let mut s = l[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = s / d;
        }
    }
    true
}

/// Default doubling count for [`spectral_radius_estimate`] wherever the
/// solvers report a closed-loop radius.
pub const RADIUS_DOUBLINGS: u32 = 40;

/// Upper bound `‖M^(2^j)‖_F^(1/2^j)` on the spectral radius, for the largest
/// `j <= max_doublings`. Powers are renormalized at every squaring and the
/// log of the norm is accumulated, so the estimate never overflows.
pub fn spectral_radius_estimate(m: &Matrix, max_doublings: u32) -> f64 {
    assert!(m.is_square(), "spectral radius of a non-square matrix");
    assert!(max_doublings >= 1, "need at least one doubling");
    let norm0 = m.frobenius_norm();
    if norm0 == 0.0 {
        return 0.0;
    }
    // p = M^(2^j) / ‖M^(2^j)‖, log_norm = log ‖M^(2^j)‖
    let mut p = m.scale_real(1.0 / norm0);
    let mut log_norm = norm0.ln();
    let mut estimate = norm0;
    for j in 1..=max_doublings {
        let sq = &p * &p;
        let nrm = sq.frobenius_norm();
        if nrm == 0.0 {
            return 0.0;
        }
        log_norm = 2.0 * log_norm + nrm.ln();
        let next = (log_norm / 2f64.powi(j as i32)).exp();
        // exact arithmetic gives a nonincreasing sequence; clamp roundoff
        estimate = estimate.min(next);
        p = sq.scale_real(1.0 / nrm);
    }
    estimate
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mat(rows: &[&[f64]]) -> Matrix {
        Matrix::from_real_rows(rows).unwrap()
    }

    #[test]
    fn solve_linear_examples() {
        let b = mat(&[&[1.0], &[2.0]]);
        assert_eq!(solve_linear(&Matrix::identity(2), &b).unwrap(), b);
        let x = solve_linear(&Matrix::from_real_diagonal(&[2.0, 4.0]), &mat(&[&[2.0], &[8.0]])).unwrap();
        assert!((x - mat(&[&[1.0], &[2.0]])).frobenius_norm() < 1e-15);
        assert!(matches!(
            solve_linear(&mat(&[&[1.0, 1.0], &[1.0, 1.0]]), &Matrix::identity(2)),
            Err(Error::SingularMatrix { .. })
        ));
    }

    #[test]
    fn psd_examples() {
        assert!(psd_check(&HermitianMatrix::identity(2), 0.0));
        assert!(!psd_check(&HermitianMatrix::from_real_diagonal(&[1.0, -1.0]), 1e-8));
        assert!(psd_check(&HermitianMatrix::zeros(3), 0.0));
    }

    #[test]
    fn psd_detects_indefinite_offdiagonal() {
        let h = HermitianMatrix::new(mat(&[&[1.0, 2.0], &[2.0, 1.0]])).unwrap();
        assert!(!psd_check(&h, 1e-10));
        let h = HermitianMatrix::new(mat(&[&[1.0, 1.0], &[1.0, 1.0]])).unwrap();
        assert!(psd_check(&h, 0.0));
    }

    #[test]
    fn radius_examples() {
        let r = spectral_radius_estimate(&Matrix::from_real_diagonal(&[0.5, -0.25]), 10);
        assert!(r >= 0.5 - 1e-15 && r <= 0.5 * 2f64.powf(1.0 / 1024.0));
        assert_eq!(spectral_radius_estimate(&mat(&[&[0.0, 1.0], &[0.0, 0.0]]), 3), 0.0);
        // (2^2048 + 1)^(1/2048) is 2 to double precision
        let r = spectral_radius_estimate(&Matrix::from_real_diagonal(&[2.0, 1.0]), 10);
        assert!((r / 2.0 - 1.0).abs() < 1e-3);
    }

    #[test]
    fn radius_bounds_jordan_block() {
        let j = mat(&[&[0.9, 1.0], &[0.0, 0.9]]);
        let r = spectral_radius_estimate(&j, 40);
        assert!(r >= 0.9 - 1e-12 && r < 0.9 + 1e-6);
    }
}
