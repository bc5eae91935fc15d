//! Lyapunov equations `A^* X + X A + Q = 0`.
//!
//! A Cayley transform with shift `τ` in the right half-plane turns the
//! equation into a Stein equation for `c(A) = (A - τ̄I)^{-1}(A + τI)`; ADI is
//! Smith on that Stein equation with a fresh shift at every step. LR-ADI
//! builds the same end iterate as a product `Z Z^*` when `Q = C^* C`.

use crate::error::{Error, Result};
use crate::linalg::{psd_check, HermitianMatrix, Lu, Matrix, C64};
use crate::report::{ratio, SolveOptions, SolveReport, Tracker};
use crate::stein::{SquaredSmithState, SteinProblem, OVERFLOW_NORM};

#[derive(Clone, Debug)]
pub struct LyapunovProblem {
    pub a: Matrix,
    pub q: HermitianMatrix,
    /// Optional factor with `Q = C^* C`.
    pub c: Option<Matrix>,
}

impl LyapunovProblem {
    pub fn new(a: Matrix, q: HermitianMatrix) -> Result<Self> {
        let n = a.check_square("A")?;
        if q.size() != n {
            return Err(Error::DimensionMismatch(format!("A is {n}x{n}, Q is {0}x{0}", q.size())));
        }
        if !psd_check(&q, 1e-10 * q.frobenius_norm()) {
            return Err(Error::NotPositiveSemidefinite { name: "Q" });
        }
        Ok(Self { a, q, c: None })
    }

    /// Builds the problem from a factor, `Q = C^* C`.
    pub fn from_factor(a: Matrix, c: Matrix) -> Result<Self> {
        let n = a.check_square("A")?;
        if c.cols() != n {
            return Err(Error::DimensionMismatch(format!("C has {} columns, A is {n}x{n}", c.cols())));
        }
        let q = HermitianMatrix::gram(&c);
        Ok(Self { a, q, c: Some(c) })
    }

    /// Attaches a factor, checking `‖C^*C - Q‖_F <= 1e-10 max(1, ‖Q‖_F)`.
    pub fn with_factor(mut self, c: Matrix) -> Result<Self> {
        if c.cols() != self.size() {
            return Err(Error::DimensionMismatch("C column count".into()));
        }
        let gap = (c.adjoint() * &c - self.q.as_matrix()).frobenius_norm();
        if gap > 1e-10 * self.q.frobenius_norm().max(1.0) {
            return Err(Error::DimensionMismatch(format!("C^*C differs from Q by {gap:.3e}")));
        }
        self.c = Some(c);
        Ok(self)
    }

    pub fn size(&self) -> usize {
        self.a.rows()
    }
}

/// Nonempty list of shifts in the open right half-plane.
#[derive(Clone, Debug, PartialEq)]
pub struct ShiftSequence(Vec<C64>);

impl ShiftSequence {
    pub fn new(shifts: Vec<C64>) -> Result<Self> {
        if shifts.is_empty() {
            return Err(Error::EmptyShifts);
        }
        if let Some(t) = shifts.iter().find(|t| !(t.re > 0.0) || !t.im.is_finite()) {
            return Err(Error::InvalidShift { re: t.re, im: t.im });
        }
        Ok(Self(shifts))
    }

    pub fn single(tau: f64) -> Result<Self> {
        Self::new(vec![C64::new(tau, 0.0)])
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Shift used at step `k`, cycling through the list.
    pub fn get(&self, k: usize) -> C64 {
        self.0[k % self.0.len()]
    }
}

/// `Z = [V_1 ... V_k]` with `Z Z^*` approximating the solution.
#[derive(Clone, Debug)]
pub struct LowRankFactor {
    pub z: Matrix,
    pub block_width: usize,
}

impl LowRankFactor {
    pub fn blocks(&self) -> usize {
        self.z.cols() / self.block_width
    }

    /// `Z Z^*`.
    pub fn product(&self) -> HermitianMatrix {
        HermitianMatrix::from_hermitian_part(&(&self.z * self.z.adjoint()))
    }

    /// Product of the first `j` blocks.
    pub fn prefix_product(&self, j: usize) -> HermitianMatrix {
        let zj = self.z.block(0, 0, self.z.rows(), j * self.block_width);
        HermitianMatrix::from_hermitian_part(&(&zj * zj.adjoint()))
    }
}

fn singular_shift(tau: C64) -> Error {
    Error::SingularShift { re: tau.re, im: tau.im }
}

/// Factorization of `A - τ̄ I` with a shift-specific error on failure.
fn shifted_lu(a: &Matrix, tau: C64) -> Result<Lu> {
    Lu::new(&a.shift_diagonal(-tau.conj())).map_err(|e| match e {
        Error::SingularMatrix { .. } => singular_shift(tau),
        other => other,
    })
}

/// One Cayley step: `c(A)` and `2Re(τ) (A^*-τI)^{-1} Q (A-τ̄I)^{-1}`.
fn cayley_parts(p: &LyapunovProblem, tau: C64) -> Result<(Matrix, HermitianMatrix)> {
    let lu = shifted_lu(&p.a, tau)?;
    let c = lu.solve(&p.a.shift_diagonal(tau))?;
    // (A^* - τI) = (A - τ̄I)^*, so apply the adjoint solve from both sides
    let left = lu.solve_adjoint(p.q.as_matrix())?;
    let both = lu.solve_adjoint(&left.adjoint())?.adjoint();
    let qt = HermitianMatrix::from_hermitian_part(&both.scale_real(2.0 * tau.re));
    Ok((c, qt))
}

/// Cayley reduction to the Stein equation `X - c(A)^* X c(A) = Q̃`.
pub fn cayley_to_stein(p: &LyapunovProblem, tau: C64) -> Result<SteinProblem> {
    if !(tau.re > 0.0) {
        return Err(Error::InvalidShift { re: tau.re, im: tau.im });
    }
    let (c, q) = cayley_parts(p, tau)?;
    Ok(SteinProblem { a: c, q })
}

/// `‖A^*X + XA + Q‖_F / (‖Q‖_F + 2‖A‖_F‖X‖_F)`.
pub fn lyap_residual(x: &HermitianMatrix, p: &LyapunovProblem) -> f64 {
    let ax = p.a.adjoint() * x.as_matrix();
    let r = &ax + ax.adjoint() + p.q.as_matrix();
    ratio(
        r.frobenius_norm(),
        p.q.frobenius_norm() + 2.0 * p.a.frobenius_norm() * x.frobenius_norm(),
    )
}

/// One ADI step `X_{k+1} = Q_k + c_k(A)^* X_k c_k(A)`.
pub fn adi_step(xk: &HermitianMatrix, p: &LyapunovProblem, tau: C64) -> Result<HermitianMatrix> {
    let (c, qk) = cayley_parts(p, tau)?;
    let next = c.adjoint() * xk.as_matrix() * &c + qk.as_matrix();
    Ok(HermitianMatrix::from_hermitian_part(&next))
}

/// ADI from `X_0 = 0`, cycling through `shifts`.
pub fn adi_solve(p: &LyapunovProblem, shifts: &ShiftSequence, opts: &SolveOptions) -> Result<SolveReport> {
    opts.validate()?;
    let mut tracker = Tracker::new();
    let mut x = HermitianMatrix::zeros(p.size());
    tracker.record(lyap_residual(&x, p));
    if tracker.last_residual() <= opts.tol {
        return Ok(tracker.finish(x, true, 0));
    }
    // factor each distinct shift once
    let mut cache: Vec<Option<(Matrix, HermitianMatrix)>> = vec![None; shifts.len()];
    for k in 0..opts.max_iter {
        let slot = k % shifts.len();
        if cache[slot].is_none() {
            cache[slot] = Some(cayley_parts(p, shifts.get(k))?);
        }
        let (c, qk) = cache[slot].as_ref().expect("filled above");
        let next = HermitianMatrix::from_hermitian_part(&(c.adjoint() * x.as_matrix() * c + qk.as_matrix()));
        let update = (next.as_matrix() - x.as_matrix()).frobenius_norm();
        let norm = next.frobenius_norm();
        if !(norm <= OVERFLOW_NORM) {
            return Err(Error::Overflow { iterations: k + 1, norm });
        }
        x = next;
        tracker.record_update(update);
        tracker.record(lyap_residual(&x, p));
        if tracker.last_residual() <= opts.tol {
            return Ok(tracker.finish(x, true, k + 1));
        }
        if update <= opts.stagnation_tol * norm {
            return Ok(tracker.finish(x, false, k + 1));
        }
    }
    Ok(tracker.finish(x, false, opts.max_iter))
}

/// Low-rank ADI with at most `k` blocks.
///
/// `V_1 = √(2Re τ_0) (A^* - τ_0 I)^{-1} C^*` and
/// `V_{j+1} = √(Re τ_j / Re τ_{j-1}) (V_j + (τ_j + τ̄_{j-1})(A^* - τ_j I)^{-1} V_j)`.
/// After `k` blocks `Z Z^*` equals the `k`-step ADI iterate for the same
/// shifts; intermediate prefixes correspond to the shifts in reverse order.
/// Stops early once the block's contribution `‖V_j‖_F²` to the product is
/// below `tol ‖Z‖_F²`.
pub fn lr_adi_solve(
    p: &LyapunovProblem,
    shifts: &ShiftSequence,
    k: usize,
    opts: &SolveOptions,
) -> Result<LowRankFactor> {
    opts.validate()?;
    let c = p.c.as_ref().ok_or(Error::MissingFactor)?;
    let width = c.rows();
    let n = p.size();
    if k == 0 {
        return Err(Error::InvalidSpec("lr-adi needs k >= 1".into()));
    }
    let ah = p.a.adjoint();
    // A^* - τI = (A - τ̄I)^*, reuse the factorization of A - τ̄I
    let mut lus: Vec<Option<Lu>> = vec![None; shifts.len()];
    let mut apply = |j: usize, rhs: &Matrix| -> Result<Matrix> {
        let slot = j % shifts.len();
        if lus[slot].is_none() {
            let tau = shifts.get(j);
            lus[slot] = Some(Lu::new(&ah.shift_diagonal(-tau)).map_err(|_| singular_shift(tau))?);
        }
        lus[slot].as_ref().expect("filled above").solve(rhs)
    };

    let tau0 = shifts.get(0);
    let mut v = apply(0, &c.adjoint())?.scale_real((2.0 * tau0.re).sqrt());
    let mut blocks = vec![v.clone()];
    let mut z_norm_sq = v.frobenius_norm().powi(2);
    for j in 1..k {
        let (tj, tprev) = (shifts.get(j), shifts.get(j - 1));
        let w = apply(j, &v)?;
        v = (v + w.scale(tj + tprev.conj())).scale_real((tj.re / tprev.re).sqrt());
        let vn = v.frobenius_norm();
        z_norm_sq += vn * vn;
        blocks.push(v.clone());
        if vn * vn <= opts.tol * z_norm_sq {
            break;
        }
    }
    let refs: Vec<&Matrix> = blocks.iter().collect();
    let z = if refs.is_empty() { Matrix::zeros(n, width) } else { Matrix::hstack(&refs)? };
    Ok(LowRankFactor { z, block_width: width })
}

/// Cayley transform with shift `τ` followed by squared Smith on the resulting
/// Stein equation. Residuals are Lyapunov residuals of the Stein iterates.
pub fn cayley_smith_solve(p: &LyapunovProblem, tau: C64, opts: &SolveOptions) -> Result<SolveReport> {
    opts.validate()?;
    let stein = cayley_to_stein(p, tau)?;
    let mut tracker = Tracker::new();
    let mut state = SquaredSmithState::new(&stein);
    tracker.record(lyap_residual(&state.q, p));
    for k in 1..=opts.max_iter {
        let update = state.step();
        let na = state.a.frobenius_norm();
        let nq = state.q.frobenius_norm();
        if !(na <= OVERFLOW_NORM) || !(nq <= OVERFLOW_NORM) {
            return Err(Error::Overflow { iterations: k, norm: na.max(nq) });
        }
        tracker.record_update(update);
        tracker.record(lyap_residual(&state.q, p));
        if tracker.last_residual() <= opts.tol {
            return Ok(tracker.finish(state.q, true, k));
        }
        if update <= opts.stagnation_tol * nq {
            return Ok(tracker.finish(state.q, false, k));
        }
    }
    Ok(tracker.finish(state.q, false, opts.max_iter))
}

/// Optimal single repeated shift `√(ab)` when the spectrum of `-A` lies in
/// `[a, b]` and `A` is Hermitian.
pub fn wachspress_single_shift(a: f64, b: f64) -> Result<f64> {
    if !(a > 0.0) || !(a <= b) || !b.is_finite() {
        return Err(Error::InvalidInterval { a, b });
    }
    Ok((a * b).sqrt())
}

/// Heuristic single shift from the bounds `1/‖A^{-1}‖_F <= |λ| <= ‖A‖_F`.
pub fn default_shift(p: &LyapunovProblem) -> Result<f64> {
    let lu = Lu::new(&p.a)?;
    let lower = 1.0 / lu.inverse().frobenius_norm();
    wachspress_single_shift(lower, p.a.frobenius_norm().max(lower))
}
