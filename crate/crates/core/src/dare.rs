//! Discrete-time algebraic Riccati equations `X = Q + A^* X (I + G X)^{-1} A`
//! with `G, Q ⪰ 0`.

use crate::error::{Error, Result};
use crate::linalg::{psd_check, spectral_radius_estimate, HermitianMatrix, Lu, Matrix, RADIUS_DOUBLINGS};
use crate::report::{ratio, SolveOptions, SolveReport, Tracker};
use crate::stein::OVERFLOW_NORM;

#[derive(Clone, Debug)]
pub struct DareProblem {
    pub a: Matrix,
    pub g: HermitianMatrix,
    pub q: HermitianMatrix,
}

impl DareProblem {
    pub fn new(a: Matrix, g: HermitianMatrix, q: HermitianMatrix) -> Result<Self> {
        let n = a.check_square("A")?;
        for (name, m) in [("G", &g), ("Q", &q)] {
            if m.size() != n {
                return Err(Error::DimensionMismatch(format!("A is {n}x{n}, {name} is {0}x{0}", m.size())));
            }
        }
        if !psd_check(&g, 1e-10 * g.frobenius_norm()) {
            return Err(Error::NotPositiveSemidefinite { name: "G" });
        }
        if !psd_check(&q, 1e-10 * q.frobenius_norm()) {
            return Err(Error::NotPositiveSemidefinite { name: "Q" });
        }
        Ok(Self { a, g, q })
    }

    pub fn size(&self) -> usize {
        self.a.rows()
    }

    /// The dual problem `(A^*, Q, G)`, whose maximal solution is `Y_+`.
    pub fn dual(&self) -> Self {
        Self {
            a: self.a.adjoint(),
            g: self.q.clone(),
            q: self.g.clone(),
        }
    }
}

/// `(A_k, G_k, Q_k)` of the doubling iteration.
#[derive(Clone, Debug)]
pub struct DoublingState {
    pub a: Matrix,
    pub g: HermitianMatrix,
    pub q: HermitianMatrix,
    pub k: usize,
}

impl DoublingState {
    pub fn new(p: &DareProblem) -> Self {
        Self {
            a: p.a.clone(),
            g: p.g.clone(),
            q: p.q.clone(),
            k: 0,
        }
    }

    /// One SDA step. Returns the norm of the `Q` update.
    pub fn step(&mut self) -> Result<f64> {
        let n = self.a.rows();
        let w = Matrix::identity(n) + self.g.as_matrix() * self.q.as_matrix();
        let lu = Lu::new(&w)?;
        // (I+QG)^{-1} = (I+GQ)^{-*}, and G(I+QG)^{-1} = (I+GQ)^{-1}G
        let a_next = &self.a * lu.solve(&self.a)?;
        let g_inc = &self.a * lu.solve(self.g.as_matrix())? * self.a.adjoint();
        let q_inc = self.a.adjoint() * lu.solve_adjoint(self.q.as_matrix())? * &self.a;
        let update = q_inc.frobenius_norm();
        self.g = HermitianMatrix::from_hermitian_part(&(g_inc + self.g.as_matrix()));
        self.q = HermitianMatrix::from_hermitian_part(&(q_inc + self.q.as_matrix()));
        self.a = a_next;
        self.k += 1;
        Ok(update)
    }
}

#[derive(Clone, Debug)]
pub struct DareSolution {
    pub x_plus: HermitianMatrix,
    /// Maximal solution of the dual equation; only the doubling method
    /// produces it.
    pub y_plus: Option<HermitianMatrix>,
    pub report: SolveReport,
}

/// `W = (I + X G)^{-1} X`, equal to `X (I + G X)^{-1}`.
fn gain_core(x: &HermitianMatrix, g: &HermitianMatrix) -> Result<Matrix> {
    let n = x.size();
    let m = Matrix::identity(n) + x.as_matrix() * g.as_matrix();
    Lu::new(&m)?.solve(x.as_matrix())
}

/// `Q + A^* X_k (I + G X_k)^{-1} A`.
pub fn dare_step(xk: &HermitianMatrix, p: &DareProblem) -> Result<HermitianMatrix> {
    let w = HermitianMatrix::from_hermitian_part(&gain_core(xk, &p.g)?);
    let next = p.a.adjoint() * w.as_matrix() * &p.a + p.q.as_matrix();
    Ok(HermitianMatrix::from_hermitian_part(&next))
}

/// `‖Q + A^*X(I+GX)^{-1}A - X‖_F / (‖Q‖_F + ‖X‖_F (1 + ‖A‖_F²))`.
pub fn dare_residual(x: &HermitianMatrix, p: &DareProblem) -> Result<f64> {
    let r = dare_step(x, p)?.into_matrix() - x.as_matrix();
    let na = p.a.frobenius_norm();
    Ok(ratio(
        r.frobenius_norm(),
        p.q.frobenius_norm() + x.frobenius_norm() * (1.0 + na * na),
    ))
}

/// `ρ̂((I + G X)^{-1} A)`.
pub fn closed_loop_radius(x: &HermitianMatrix, p: &DareProblem) -> Result<f64> {
    let m = Matrix::identity(p.size()) + p.g.as_matrix() * x.as_matrix();
    let cl = Lu::new(&m)?.solve(&p.a)?;
    Ok(spectral_radius_estimate(&cl, RADIUS_DOUBLINGS))
}

fn finish(
    tracker: Tracker,
    x: HermitianMatrix,
    y: Option<HermitianMatrix>,
    converged: bool,
    iterations: usize,
    p: &DareProblem,
) -> Result<DareSolution> {
    let mut report = tracker.finish(x.clone(), converged, iterations);
    report.closed_loop_radius = closed_loop_radius(&x, p).ok();
    Ok(DareSolution {
        x_plus: x,
        y_plus: y,
        report,
    })
}

/// Fixed point from `X_0 = 0`.
pub fn dare_fixed_point_solve(p: &DareProblem, opts: &SolveOptions) -> Result<DareSolution> {
    opts.validate()?;
    let mut tracker = Tracker::new();
    let mut x = HermitianMatrix::zeros(p.size());
    tracker.record(dare_residual(&x, p)?);
    if tracker.last_residual() <= opts.tol {
        return finish(tracker, x, None, true, 0, p);
    }
    for k in 1..=opts.max_iter {
        let next = dare_step(&x, p)?;
        let update = (next.as_matrix() - x.as_matrix()).frobenius_norm();
        let norm = next.frobenius_norm();
        if !(norm <= OVERFLOW_NORM) {
            return Err(Error::Overflow { iterations: k, norm });
        }
        x = next;
        tracker.record_update(update);
        tracker.record(dare_residual(&x, p)?);
        if tracker.last_residual() <= opts.tol {
            return finish(tracker, x, None, true, k, p);
        }
        if update <= opts.stagnation_tol * norm {
            return finish(tracker, x, None, false, k, p);
        }
    }
    finish(tracker, x, None, false, opts.max_iter, p)
}

/// Structure-preserving doubling from `(A, G, Q)`.
///
/// Stops once the residual of `Q_k` is below `tol` and either
/// `‖A_k‖_F² <= tol ‖Q_k‖_F` or the `Q` update is below `tol ‖Q_k‖_F`.
/// At least one step is always taken.
pub fn sda_solve(p: &DareProblem, opts: &SolveOptions) -> Result<DareSolution> {
    opts.validate()?;
    let mut tracker = Tracker::new();
    let mut state = DoublingState::new(p);
    tracker.record(dare_residual(&state.q, p)?);
    for k in 1..=opts.max_iter {
        let update = state.step()?;
        let nq = state.q.frobenius_norm();
        let na = state.a.frobenius_norm();
        let big = nq.max(na).max(state.g.frobenius_norm());
        if !(big <= OVERFLOW_NORM) {
            return Err(Error::Overflow { iterations: k, norm: big });
        }
        tracker.record_update(update);
        tracker.record(dare_residual(&state.q, p)?);
        let small_a = na * na <= opts.tol * nq;
        let small_update = update <= opts.tol * nq;
        if tracker.last_residual() <= opts.tol && (small_a || small_update) {
            return finish(tracker, state.q, Some(state.g), true, k, p);
        }
        if update <= opts.stagnation_tol * nq && (small_a || k > 1) {
            return finish(tracker, state.q, Some(state.g), false, k, p);
        }
    }
    finish(tracker, state.q, Some(state.g), false, opts.max_iter, p)
}

/// Blocks `[A11 A12; A21 A22] = [N1 M2]^{-1} [M1 N2]` of the factorization
/// `[M1 M2]^{-1} [N1 N2] = [A11 0; A21 I]^{-1} [I A12; 0 A22]`.
///
/// Each argument is a `2n × n` block column.
pub fn bmf_factorize(m1: &Matrix, m2: &Matrix, n1: &Matrix, n2: &Matrix) -> Result<(Matrix, Matrix, Matrix, Matrix)> {
    let rows = m1.rows();
    let n = m1.cols();
    for (name, b) in [("M1", m1), ("M2", m2), ("N1", n1), ("N2", n2)] {
        if b.rows() != rows || b.cols() != n || rows != 2 * n {
            return Err(Error::DimensionMismatch(format!(
                "{name} is {}x{}, expected {}x{n}",
                b.rows(),
                b.cols(),
                2 * n
            )));
        }
    }
    let k = Matrix::hstack(&[n1, m2])?;
    let rhs = Matrix::hstack(&[m1, n2])?;
    let t = Lu::new(&k)?.solve(&rhs)?;
    Ok((t.block(0, 0, n, n), t.block(0, n, n, n), t.block(n, 0, n, n), t.block(n, n, n, n)))
}

/// `S = [I G; 0 A^*]^{-1} [A 0; -Q I]`.
pub fn symplectic_matrix(a: &Matrix, g: &Matrix, q: &Matrix) -> Result<Matrix> {
    let n = a.check_square("A")?;
    let z = Matrix::zeros(n, n);
    let i = Matrix::identity(n);
    let left = Matrix::from_blocks(&i, g, &z, &a.adjoint())?;
    let right = Matrix::from_blocks(a, &z, &-q, &i)?;
    Lu::new(&left)?.solve(&right)
}

/// `‖S - W D W^{-1}‖_F / ‖S‖_F` with `W = [-Y_+ I; I X_+]` and
/// `D = diag((A^*)^{-1}(I + Q Y_+), (I + G X_+)^{-1} A)`.
pub fn wiener_hopf_check(sol: &DareSolution, p: &DareProblem) -> Result<f64> {
    let y = sol.y_plus.as_ref().ok_or(Error::MissingDual)?;
    let x = &sol.x_plus;
    let n = p.size();
    let i = Matrix::identity(n);
    let s = symplectic_matrix(&p.a, p.g.as_matrix(), p.q.as_matrix())?;
    let w = Matrix::from_blocks(&-y.as_matrix(), &i, &i, x.as_matrix())?;
    let d11 = Lu::new(&p.a.adjoint())?.solve(&(&i + p.q.as_matrix() * y.as_matrix()))?;
    let d22 = Lu::new(&(&i + p.g.as_matrix() * x.as_matrix()))?.solve(&p.a)?;
    let z = Matrix::zeros(n, n);
    let d = Matrix::from_blocks(&d11, &z, &z, &d22)?;
    let wd = &w * &d;
    let rebuilt = Lu::new(&w)?.solve_right(&wd)?;
    Ok(ratio((&s - rebuilt).frobenius_norm(), s.frobenius_norm()))
}
