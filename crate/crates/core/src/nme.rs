//! The nonlinear matrix equation `X + A^* X^{-1} A = Q` with `Q ≻ 0`, and
//! the factorization `A^* z^{-1} + Q + A z = (I - Y^* z^{-1}) X (I - Y z)`
//! it encodes.

use crate::error::{Error, Result};
use crate::linalg::{psd_check, spectral_radius_estimate, HermitianMatrix, Lu, Matrix, RADIUS_DOUBLINGS};
use crate::report::{ratio, SolveOptions, SolveReport, Tracker};
use crate::stein::OVERFLOW_NORM;

#[derive(Clone, Debug)]
pub struct NmeProblem {
    pub a: Matrix,
    pub q: HermitianMatrix,
}

impl NmeProblem {
    pub fn new(a: Matrix, q: HermitianMatrix) -> Result<Self> {
        let n = a.check_square("A")?;
        if q.size() != n {
            return Err(Error::DimensionMismatch(format!("A is {n}x{n}, Q is {0}x{0}", q.size())));
        }
        let nq = q.frobenius_norm();
        if !psd_check(&q, 1e-10 * nq) {
            return Err(Error::NotPositiveSemidefinite { name: "Q" });
        }
        if Lu::with_threshold(q.as_matrix(), 1e-12 * nq).is_err() {
            return Err(Error::NotPositiveDefinite { name: "Q" });
        }
        Ok(Self { a, q })
    }

    pub fn size(&self) -> usize {
        self.a.rows()
    }
}

/// `Q - A^* X_k^{-1} A`.
pub fn nme_step(xk: &HermitianMatrix, p: &NmeProblem) -> Result<HermitianMatrix> {
    let t = Lu::new(xk.as_matrix())?.solve(&p.a)?;
    let next = p.q.as_matrix() - p.a.adjoint() * t;
    Ok(HermitianMatrix::from_hermitian_part(&next))
}

/// `‖X + A^*X^{-1}A - Q‖_F / (‖Q‖_F + ‖X‖_F + ‖A‖_F² / π)` where `π` is the
/// smallest pivot of the factorization of `X`.
pub fn nme_residual(x: &HermitianMatrix, p: &NmeProblem) -> Result<f64> {
    let lu = Lu::new(x.as_matrix())?;
    let t = lu.solve(&p.a)?;
    let r = x.as_matrix() + p.a.adjoint() * t - p.q.as_matrix();
    let na = p.a.frobenius_norm();
    Ok(ratio(
        r.frobenius_norm(),
        p.q.frobenius_norm() + x.frobenius_norm() + na * na / lu.min_pivot(),
    ))
}

/// `‖A + QY + A^*Y²‖_F / (‖A‖_F + ‖Q‖_F‖Y‖_F + ‖A‖_F‖Y‖_F²)`.
pub fn uqme_residual(y: &Matrix, p: &NmeProblem) -> f64 {
    let r = &p.a + p.q.as_matrix() * y + p.a.adjoint() * y * y;
    let (na, ny) = (p.a.frobenius_norm(), y.frobenius_norm());
    ratio(r.frobenius_norm(), na + p.q.frobenius_norm() * ny + na * ny * ny)
}

/// Fixed point from `X_1 = Q`. `iterations` counts applications of
/// [`nme_step`], so the result after `k` steps is `X_{k+1}`; at least one step
/// is taken.
pub fn nme_fixed_point_solve(p: &NmeProblem, opts: &SolveOptions) -> Result<SolveReport> {
    opts.validate()?;
    let mut tracker = Tracker::new();
    let mut x = p.q.clone();
    tracker.record(nme_residual(&x, p)?);
    for k in 1..=opts.max_iter {
        let next = nme_step(&x, p)?;
        let update = (next.as_matrix() - x.as_matrix()).frobenius_norm();
        let norm = next.frobenius_norm();
        if !(norm <= OVERFLOW_NORM) {
            return Err(Error::Overflow { iterations: k, norm });
        }
        x = next;
        tracker.record_update(update);
        tracker.record(nme_residual(&x, p)?);
        if tracker.last_residual() <= opts.tol {
            return Ok(tracker.finish(x, true, k));
        }
        if update <= opts.stagnation_tol * norm {
            return Ok(tracker.finish(x, false, k));
        }
    }
    Ok(tracker.finish(x, false, opts.max_iter))
}

/// Cyclic reduction state `(A_k, Q_k, U_k)`.
#[derive(Clone, Debug)]
pub struct CrState {
    pub a: Matrix,
    pub q: HermitianMatrix,
    pub u: HermitianMatrix,
    pub k: usize,
}

impl CrState {
    pub fn new(p: &NmeProblem) -> Self {
        Self {
            a: p.a.clone(),
            q: p.q.clone(),
            u: p.q.clone(),
            k: 0,
        }
    }

    /// One reduction step. Returns the norm of the `Q` update.
    pub fn step(&mut self) -> Result<f64> {
        let lu = Lu::new(self.u.as_matrix())?;
        let ua = lu.solve(&self.a)?;
        let uah = lu.solve(&self.a.adjoint())?;
        let q_dec = self.a.adjoint() * &ua;
        let update = q_dec.frobenius_norm();
        let u_next = self.u.as_matrix() - &q_dec - &self.a * uah;
        self.q = HermitianMatrix::from_hermitian_part(&(self.q.as_matrix() - q_dec));
        self.u = HermitianMatrix::from_hermitian_part(&u_next);
        self.a = -(&self.a * ua);
        self.k += 1;
        Ok(update)
    }
}

/// The same recursion written with `G_k = Q_k - U_k`, starting from `G_0 = 0`.
#[derive(Clone, Debug)]
pub struct SdaIIState {
    pub a: Matrix,
    pub q: HermitianMatrix,
    pub g: HermitianMatrix,
    pub k: usize,
}

impl SdaIIState {
    pub fn new(p: &NmeProblem) -> Self {
        Self {
            a: p.a.clone(),
            q: p.q.clone(),
            g: HermitianMatrix::zeros(p.size()),
            k: 0,
        }
    }

    pub fn step(&mut self) -> Result<()> {
        let lu = Lu::new(&(self.q.as_matrix() - self.g.as_matrix()))?;
        let ta = lu.solve(&self.a)?;
        let tah = lu.solve(&self.a.adjoint())?;
        let q_next = self.q.as_matrix() - self.a.adjoint() * &ta;
        let g_next = self.g.as_matrix() + &self.a * tah;
        self.a = -(&self.a * ta);
        self.q = HermitianMatrix::from_hermitian_part(&q_next);
        self.g = HermitianMatrix::from_hermitian_part(&g_next);
        self.k += 1;
        Ok(())
    }
}

/// Cyclic reduction from `A_0 = A`, `Q_0 = U_0 = Q`.
///
/// Stops once the residual of `Q_k` is below `tol` and either
/// `‖A_k‖_F² <= tol ‖Q‖_F` or the `Q` update is below `tol ‖Q_k‖_F`.
/// At least one step is always taken.
pub fn cyclic_reduction_solve(p: &NmeProblem, opts: &SolveOptions) -> Result<SolveReport> {
    opts.validate()?;
    let mut tracker = Tracker::new();
    let mut state = CrState::new(p);
    let nq0 = p.q.frobenius_norm();
    tracker.record(nme_residual(&state.q, p)?);
    for k in 1..=opts.max_iter {
        let update = state.step()?;
        let na = state.a.frobenius_norm();
        let nq = state.q.frobenius_norm();
        let big = na.max(nq).max(state.u.frobenius_norm());
        if !(big <= OVERFLOW_NORM) {
            return Err(Error::Overflow { iterations: k, norm: big });
        }
        tracker.record_update(update);
        tracker.record(nme_residual(&state.q, p)?);
        let small_a = na * na <= opts.tol * nq0;
        let small_update = update <= opts.tol * nq;
        if tracker.last_residual() <= opts.tol && (small_a || small_update) {
            return Ok(tracker.finish(state.q, true, k));
        }
        if update <= opts.stagnation_tol * nq && (small_a || k > 1) {
            return Ok(tracker.finish(state.q, false, k));
        }
    }
    Ok(tracker.finish(state.q, false, opts.max_iter))
}

/// `X` and `Y` with `-XY = A`, `X + Y^*XY = Q`.
#[derive(Clone, Debug)]
pub struct SpectralFactorization {
    pub x: HermitianMatrix,
    pub y: Matrix,
    pub report: SolveReport,
}

impl SpectralFactorization {
    /// `‖XY + A‖_F / max(1, ‖A‖_F)`.
    pub fn coefficient_defect(&self, p: &NmeProblem) -> f64 {
        (self.x.as_matrix() * &self.y + &p.a).frobenius_norm() / p.a.frobenius_norm().max(1.0)
    }

    /// `‖X + Y^*XY - Q‖_F / ‖Q‖_F`.
    pub fn constant_defect(&self, p: &NmeProblem) -> f64 {
        let r = self.x.as_matrix() + self.y.adjoint() * self.x.as_matrix() * &self.y - p.q.as_matrix();
        ratio(r.frobenius_norm(), p.q.frobenius_norm())
    }

    pub fn y_radius(&self) -> f64 {
        spectral_radius_estimate(&self.y, RADIUS_DOUBLINGS)
    }
}

/// Runs cyclic reduction and sets `Y = -X^{-1} A`.
pub fn spectral_factorize(p: &NmeProblem, opts: &SolveOptions) -> Result<SpectralFactorization> {
    let mut report = cyclic_reduction_solve(p, opts)?;
    let x = report.x.clone();
    let y = -Lu::new(x.as_matrix())?.solve(&p.a)?;
    report.closed_loop_radius = Some(spectral_radius_estimate(&y, RADIUS_DOUBLINGS));
    Ok(SpectralFactorization { x, y, report })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::C64;

    fn scalar(a: f64, q: f64) -> NmeProblem {
        NmeProblem::new(Matrix::scalar(C64::new(a, 0.0)), HermitianMatrix::from_real_diagonal(&[q])).unwrap()
    }

    fn h(v: f64) -> HermitianMatrix {
        HermitianMatrix::from_real_diagonal(&[v])
    }

    fn val(x: &HermitianMatrix) -> f64 {
        x.get(0, 0).re
    }

    #[test]
    fn step_examples() {
        assert_eq!(val(&nme_step(&h(3.0), &scalar(0.0, 1.5)).unwrap()), 1.5);
        assert!((val(&nme_step(&h(2.0), &scalar(1.0, 2.5)).unwrap()) - 2.0).abs() < 1e-15);
        assert_eq!(val(&nme_step(&h(1.0), &scalar(1.0, 2.0)).unwrap()), 1.0);
    }

    #[test]
    fn fixed_point_scalar() {
        let rep = nme_fixed_point_solve(&scalar(1.0, 2.5), &SolveOptions::basic().with_tol(1e-15)).unwrap();
        assert!(rep.converged);
        assert!((val(&rep.x) - 2.0).abs() <= 1e-12);
        assert!((rep.rate_estimate - 0.25).abs() < 1e-3);
        let rep = nme_fixed_point_solve(&scalar(0.0, 1.5), &SolveOptions::basic()).unwrap();
        assert_eq!(rep.iterations, 1);
        assert_eq!(val(&rep.x), 1.5);
    }

    #[test]
    fn fixed_point_critical_is_slow() {
        let rep = nme_fixed_point_solve(&scalar(1.0, 2.0), &SolveOptions::basic().with_max_iter(2000)).unwrap();
        assert!(!rep.converged);
        assert!(rep.rate_estimate > 0.99);
        assert!((val(&rep.x) - 2002.0 / 2001.0).abs() < 1e-10);
    }

    #[test]
    fn cr_scalar() {
        let rep = cyclic_reduction_solve(&scalar(1.0, 2.5), &SolveOptions::doubling()).unwrap();
        assert!(rep.converged);
        assert!(rep.iterations <= 7);
        assert!((val(&rep.x) - 2.0).abs() <= 1e-12);
    }

    #[test]
    fn cr_matches_fixed_point_powers() {
        let p = scalar(1.0, 2.5);
        let mut s = CrState::new(&p);
        for _ in 0..3 {
            s.step().unwrap();
        }
        let mut x = p.q.clone();
        for _ in 0..7 {
            x = nme_step(&x, &p).unwrap();
        }
        assert!((val(&s.q) - val(&x)).abs() <= 1e-12);
    }

    #[test]
    fn cr_critical_rate() {
        let rep = cyclic_reduction_solve(&scalar(1.0, 2.0), &SolveOptions::doubling()).unwrap();
        assert!(rep.converged);
        assert!((0.4..=0.6).contains(&rep.rate_estimate), "{}", rep.rate_estimate);
    }

    #[test]
    fn sda2_matches_cr() {
        let p = NmeProblem::new(
            Matrix::from_real_rows(&[&[0.3, 0.1], &[-0.2, 0.25]]).unwrap(),
            HermitianMatrix::new(Matrix::from_real_rows(&[&[1.5, 0.2], &[0.2, 1.2]]).unwrap()).unwrap(),
        )
        .unwrap();
        let (mut cr, mut sda) = (CrState::new(&p), SdaIIState::new(&p));
        for _ in 0..4 {
            cr.step().unwrap();
            sda.step().unwrap();
            let gap = (cr.u.as_matrix() - (sda.q.as_matrix() - sda.g.as_matrix())).frobenius_norm();
            assert!(gap <= 1e-10 * cr.u.frobenius_norm());
        }
    }

    #[test]
    fn factorization_examples() {
        let p = scalar(1.0, 2.5);
        let f = spectral_factorize(&p, &SolveOptions::doubling()).unwrap();
        assert!((val(&f.x) - 2.0).abs() < 1e-12);
        assert!((f.y.get(0, 0).re + 0.5).abs() < 1e-12);
        assert!(f.coefficient_defect(&p) < 1e-12 && f.constant_defect(&p) < 1e-12);

        let p = scalar(0.0, 1.5);
        let f = spectral_factorize(&p, &SolveOptions::doubling()).unwrap();
        assert_eq!(f.y.get(0, 0), C64::new(0.0, 0.0));

        let p = scalar(1.0, 2.0);
        let f = spectral_factorize(&p, &SolveOptions::doubling()).unwrap();
        assert!((val(&f.x) - 1.0).abs() < 1e-5);
        assert!(f.y_radius() <= 1.0 + 1e-6);
    }

    #[test]
    fn uqme_examples() {
        let y = Matrix::scalar(C64::new(-0.5, 0.0));
        assert!(uqme_residual(&y, &scalar(1.0, 2.5)) <= 1e-15);
        assert_eq!(uqme_residual(&Matrix::zeros(1, 1), &scalar(0.0, 2.5)), 0.0);
        assert_eq!(uqme_residual(&Matrix::zeros(1, 1), &scalar(1.0, 2.5)), 1.0);
    }

    #[test]
    fn rejects_singular_q() {
        assert!(matches!(
            NmeProblem::new(Matrix::identity(2), HermitianMatrix::from_real_diagonal(&[1.0, 0.0])),
            Err(Error::NotPositiveDefinite { name: "Q" })
        ));
    }
}
