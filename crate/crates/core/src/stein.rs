//! Stein equations `X - A^* X A = Q` with `Q ⪰ 0`.
//!
//! [`smith_solve`] runs the fixed point `X_{k+1} = Q + A^* X_k A` from
//! `X_0 = 0`; its iterates are partial sums of `Σ (A^*)^j Q A^j`.
//! [`squared_smith_solve`] squares `A` at every step and produces
//! `Q_k = X_{2^k}` directly.

use crate::error::{Error, Result};
use crate::linalg::{psd_check, HermitianMatrix, Matrix};
use crate::report::{ratio, SolveOptions, SolveReport, Tracker};

/// Iterate norms beyond this are treated as divergence.
pub const OVERFLOW_NORM: f64 = 1e150;

#[derive(Clone, Debug)]
pub struct SteinProblem {
    pub a: Matrix,
    pub q: HermitianMatrix,
}

impl SteinProblem {
    pub fn new(a: Matrix, q: HermitianMatrix) -> Result<Self> {
        let n = a.check_square("A")?;
        if q.size() != n {
            return Err(Error::DimensionMismatch(format!("A is {n}x{n}, Q is {0}x{0}", q.size())));
        }
        if !psd_check(&q, 1e-10 * q.frobenius_norm()) {
            return Err(Error::NotPositiveSemidefinite { name: "Q" });
        }
        Ok(Self { a, q })
    }

    pub fn size(&self) -> usize {
        self.a.rows()
    }
}

/// `Q + A^* X_k A`.
pub fn smith_step(xk: &HermitianMatrix, p: &SteinProblem) -> HermitianMatrix {
    let axa = p.a.adjoint() * xk.as_matrix() * &p.a;
    HermitianMatrix::from_hermitian_part(&(axa + p.q.as_matrix()))
}

/// `‖X - A^*XA - Q‖_F / (‖Q‖_F + ‖A‖_F² ‖X‖_F + ‖X‖_F)`.
pub fn stein_residual(x: &HermitianMatrix, p: &SteinProblem) -> f64 {
    let r = x.as_matrix() - p.a.adjoint() * x.as_matrix() * &p.a - p.q.as_matrix();
    let nx = x.frobenius_norm();
    let na = p.a.frobenius_norm();
    ratio(r.frobenius_norm(), p.q.frobenius_norm() + na * na * nx + nx)
}

pub fn smith_solve(p: &SteinProblem, opts: &SolveOptions) -> Result<SolveReport> {
    opts.validate()?;
    let mut tracker = Tracker::new();
    let mut x = HermitianMatrix::zeros(p.size());
    tracker.record(stein_residual(&x, p));
    if tracker.last_residual() <= opts.tol {
        return Ok(tracker.finish(x, true, 0));
    }
    for k in 1..=opts.max_iter {
        let next = smith_step(&x, p);
        let update = (next.as_matrix() - x.as_matrix()).frobenius_norm();
        let norm = next.frobenius_norm();
        if !(norm <= OVERFLOW_NORM) {
            return Err(Error::Overflow { iterations: k, norm });
        }
        x = next;
        tracker.record_update(update);
        tracker.record(stein_residual(&x, p));
        let res = tracker.last_residual();
        if res <= opts.tol {
            return Ok(tracker.finish(x, true, k));
        }
        if update <= opts.stagnation_tol * norm {
            return Ok(tracker.finish(x, false, k));
        }
    }
    Ok(tracker.finish(x, false, opts.max_iter))
}

/// State `(A_k, Q_k)` of the squared Smith iteration, `A_k = A^(2^k)`.
#[derive(Clone, Debug)]
pub struct SquaredSmithState {
    pub a: Matrix,
    pub q: HermitianMatrix,
    pub k: usize,
}

impl SquaredSmithState {
    pub fn new(p: &SteinProblem) -> Self {
        Self {
            a: p.a.clone(),
            q: p.q.clone(),
            k: 0,
        }
    }

    /// `Q_{k+1} = Q_k + A_k^* Q_k A_k`, `A_{k+1} = A_k²`. Returns the norm of
    /// the `Q` update.
    pub fn step(&mut self) -> f64 {
        let inc = self.a.adjoint() * self.q.as_matrix() * &self.a;
        let update = inc.frobenius_norm();
        self.q = HermitianMatrix::from_hermitian_part(&(inc + self.q.as_matrix()));
        self.a = &self.a * &self.a;
        self.k += 1;
        update
    }
}

/// Squared Smith. Always performs at least one doubling step, since
/// `Q_0 = Q` is the Smith iterate `X_1`.
pub fn squared_smith_solve(p: &SteinProblem, opts: &SolveOptions) -> Result<SolveReport> {
    opts.validate()?;
    let mut tracker = Tracker::new();
    let mut state = SquaredSmithState::new(p);
    tracker.record(stein_residual(&state.q, p));
    for k in 1..=opts.max_iter {
        let update = state.step();
        let na = state.a.frobenius_norm();
        let nq = state.q.frobenius_norm();
        if !(na <= OVERFLOW_NORM) || !(nq <= OVERFLOW_NORM) {
            return Err(Error::Overflow {
                iterations: k,
                norm: na.max(nq),
            });
        }
        tracker.record_update(update);
        tracker.record(stein_residual(&state.q, p));
        if tracker.last_residual() <= opts.tol {
            return Ok(tracker.finish(state.q, true, k));
        }
        if update <= opts.stagnation_tol * nq {
            return Ok(tracker.finish(state.q, false, k));
        }
    }
    Ok(tracker.finish(state.q, false, opts.max_iter))
}
