//! Continuous-time algebraic Riccati equations `Q + A^*X + XA - XGX = 0`.
//!
//! Three routes to the stabilizing solution: a Cayley transform to a DARE
//! solved by doubling, the matrix sign function of the Hamiltonian, and
//! Newton's method with exact inner Lyapunov solves.

use nalgebra::SVD;

use crate::dare::{DareProblem, DareSolution, DoublingState};
use crate::error::{Error, Result};
use crate::linalg::{psd_check, HermitianMatrix, Lu, Matrix, C64};
use crate::oracle;
use crate::report::{ratio, SolveOptions, Tracker};
use crate::stein::OVERFLOW_NORM;

#[derive(Clone, Debug)]
pub struct CareProblem {
    pub a: Matrix,
    pub g: HermitianMatrix,
    pub q: HermitianMatrix,
}

impl CareProblem {
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

    pub fn hamiltonian(&self) -> HamiltonianMatrix {
        HamiltonianMatrix::assemble(&self.a, self.g.as_matrix(), self.q.as_matrix())
    }
}

/// `H = [A -G; -Q -A^*]`.
#[derive(Clone, Debug, PartialEq)]
pub struct HamiltonianMatrix(Matrix);

impl HamiltonianMatrix {
    pub fn assemble(a: &Matrix, g: &Matrix, q: &Matrix) -> Self {
        Self(Matrix::from_blocks(a, &-g, &-q, &-a.adjoint()).expect("square blocks of equal size"))
    }

    /// Wraps `h` after checking `‖JH + H^*J‖_F <= 1e-10 ‖H‖_F`.
    pub fn from_matrix(h: Matrix) -> Result<Self> {
        h.check_square("H")?;
        if h.rows() % 2 != 0 {
            return Err(Error::DimensionMismatch("Hamiltonian matrix must have even size".into()));
        }
        let defect = hamiltonian_defect(&h);
        if defect > 1e-10 {
            return Err(Error::StructureLoss(format!("Hamiltonian defect {defect:.3e}")));
        }
        Ok(Self(h))
    }

    pub fn as_matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix {
        self.0
    }

    pub fn half_size(&self) -> usize {
        self.0.rows() / 2
    }
}

/// `J = [0 I; -I 0]`.
pub fn symplectic_unit(n: usize) -> Matrix {
    let i = Matrix::identity(n);
    let z = Matrix::zeros(n, n);
    Matrix::from_blocks(&z, &i, &-&i, &z).expect("square blocks")
}

/// `‖JH + H^*J‖_F / ‖H‖_F`.
pub fn hamiltonian_defect(h: &Matrix) -> f64 {
    let j = symplectic_unit(h.rows() / 2);
    let jh = &j * h;
    ratio((&jh + h.adjoint() * &j).frobenius_norm(), h.frobenius_norm())
}

/// `‖Q + A^*X + XA - XGX‖_F / (‖Q‖_F + 2‖A‖_F‖X‖_F + ‖G‖_F‖X‖_F²)`.
pub fn care_residual(x: &HermitianMatrix, p: &CareProblem) -> f64 {
    let xa = x.as_matrix() * &p.a;
    let r = p.q.as_matrix() + xa.adjoint() + &xa - x.as_matrix() * p.g.as_matrix() * x.as_matrix();
    let nx = x.frobenius_norm();
    ratio(
        r.frobenius_norm(),
        p.q.frobenius_norm() + 2.0 * p.a.frobenius_norm() * nx + p.g.frobenius_norm() * nx * nx,
    )
}

/// DARE with the same solutions, read off
/// `[A_d G_d; -Q_d A_d^*] = I + 2τ [A - τI, -G; Q, A^* - τI]^{-1}`.
pub fn care_to_dare(p: &CareProblem, tau: f64) -> Result<DareProblem> {
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(Error::InvalidShift { re: tau, im: 0.0 });
    }
    let n = p.size();
    let t = C64::new(-tau, 0.0);
    let m = Matrix::from_blocks(&p.a.shift_diagonal(t), &-p.g.as_matrix(), p.q.as_matrix(), &p.a.adjoint().shift_diagonal(t))?;
    let inv = Lu::new(&m)
        .map_err(|_| Error::SingularShift { re: tau, im: 0.0 })?
        .inverse();
    let big = Matrix::identity(2 * n) + inv.scale_real(2.0 * tau);
    let scale = big.frobenius_norm().max(1.0);
    let ad = big.block(0, 0, n, n);
    let gd = big.block(0, n, n, n);
    let qd = -big.block(n, 0, n, n);
    let adh = big.block(n, n, n, n);
    if Lu::with_threshold(&ad, 1e-12 * scale).is_err() {
        return Err(Error::SingularAd);
    }
    let drift = (&adh - ad.adjoint()).frobenius_norm() + (&gd - gd.adjoint()).frobenius_norm() + (&qd - qd.adjoint()).frobenius_norm();
    if drift > 1e-8 * scale {
        return Err(Error::StructureLoss(format!("transformed blocks lost symmetry ({drift:.3e})")));
    }
    let gd = HermitianMatrix::from_hermitian_part(&gd);
    let qd = HermitianMatrix::from_hermitian_part(&qd);
    if !psd_check(&gd, 1e-8) {
        return Err(Error::StructureLoss("G_d is indefinite".into()));
    }
    if !psd_check(&qd, 1e-8) {
        return Err(Error::StructureLoss("Q_d is indefinite".into()));
    }
    Ok(DareProblem { a: ad, g: gd, q: qd })
}

/// Doubling on the Cayley-transformed DARE. Residuals and the stopping rule
/// use the CARE residual of each `Q_k`.
pub fn care_sda_solve(p: &CareProblem, tau: f64, opts: &SolveOptions) -> Result<DareSolution> {
    opts.validate()?;
    let d = care_to_dare(p, tau)?;
    let mut tracker = Tracker::new();
    let mut state = DoublingState::new(&d);
    tracker.record(care_residual(&state.q, p));
    let mut converged = false;
    let mut iterations = opts.max_iter;
    for k in 1..=opts.max_iter {
        let update = state.step()?;
        let nq = state.q.frobenius_norm();
        let na = state.a.frobenius_norm();
        let big = nq.max(na).max(state.g.frobenius_norm());
        if !(big <= OVERFLOW_NORM) {
            return Err(Error::Overflow { iterations: k, norm: big });
        }
        tracker.record_update(update);
        tracker.record(care_residual(&state.q, p));
        let small_a = na * na <= opts.tol * nq;
        let small_update = update <= opts.tol * nq;
        if tracker.last_residual() <= opts.tol && (small_a || small_update) {
            converged = true;
            iterations = k;
            break;
        }
        if update <= opts.stagnation_tol * nq && (small_a || k > 1) {
            iterations = k;
            break;
        }
    }
    let mut report = tracker.finish(state.q.clone(), converged, iterations);
    report.closed_loop_radius = crate::dare::closed_loop_radius(&state.q, &d).ok();
    Ok(DareSolution {
        x_plus: state.q,
        y_plus: Some(state.g),
        report,
    })
}

/// Default Cayley parameter `max(1, ‖A‖_F / √n)`.
pub fn default_cayley_tau(p: &CareProblem) -> f64 {
    (p.a.frobenius_norm() / (p.size() as f64).sqrt()).max(1.0)
}

/// [`care_sda_solve`] with the default parameter, retrying at twice and
/// four times its value when the transform is singular.
pub fn care_sda_solve_auto(p: &CareProblem, opts: &SolveOptions) -> Result<DareSolution> {
    let tau = default_cayley_tau(p);
    let mut last = None;
    for factor in [1.0, 2.0, 4.0] {
        match care_sda_solve(p, factor * tau, opts) {
            Err(e @ (Error::SingularShift { .. } | Error::SingularAd)) => last = Some(e),
            other => return other,
        }
    }
    Err(last.expect("three attempts made"))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scaling {
    None,
    Determinantal,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SignOptions {
    pub scaling: Scaling,
    /// Target for the relative step `‖H_{k+1} - H_k‖_F / ‖H_k‖_F`.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SignOptions {
    fn default() -> Self {
        Self {
            scaling: Scaling::Determinantal,
            tol: 1e-12,
            max_iter: 100,
        }
    }
}

impl SignOptions {
    pub fn unscaled() -> Self {
        Self {
            scaling: Scaling::None,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) || self.max_iter < 1 {
            return Err(Error::InvalidSpec(format!("invalid sign options {self:?}")));
        }
        Ok(())
    }
}

/// `|det H|^{1/m}` for an `m × m` matrix, from the pivots of its LU.
pub fn determinantal_tau(h: &Matrix) -> Result<f64> {
    let lu = Lu::new(h)?;
    Ok((lu.log_abs_det() / h.rows() as f64).exp())
}

/// Result of [`sign_iterate`].
#[derive(Clone, Debug)]
pub struct SignIteration {
    pub limit: Matrix,
    pub converged: bool,
    pub iterations: usize,
    /// Relative step norms, one per iteration.
    pub steps: Vec<f64>,
}

/// `H_{k+1} = ½(H_k/τ_k + (H_k/τ_k)^{-1})` on an arbitrary square matrix.
///
/// Stops when the relative step is below `tol`, or when the previous step was
/// already below `1e-4` and the current one failed to halve it (roundoff
/// floor of a quadratically convergent iteration).
pub fn sign_iterate(h: &Matrix, opts: &SignOptions) -> Result<SignIteration> {
    opts.validate()?;
    h.check_square("H")?;
    let mut hk = h.clone();
    let mut steps = Vec::new();
    for k in 1..=opts.max_iter {
        let lu = Lu::new(&hk)?;
        let tau = match opts.scaling {
            Scaling::None => 1.0,
            Scaling::Determinantal => (lu.log_abs_det() / hk.rows() as f64).exp(),
        };
        let next = (hk.scale_real(1.0 / tau) + lu.inverse().scale_real(tau)).scale_real(0.5);
        if !next.is_finite() {
            return Err(Error::Overflow { iterations: k, norm: f64::INFINITY });
        }
        let step = ratio((&next - &hk).frobenius_norm(), hk.frobenius_norm());
        hk = next;
        let prev = steps.last().copied();
        steps.push(step);
        let stalled = matches!(prev, Some(p) if p <= 1e-4 && step > 0.5 * p);
        if step <= opts.tol || stalled {
            return Ok(SignIteration {
                limit: hk,
                converged: true,
                iterations: k,
                steps,
            });
        }
    }
    Ok(SignIteration {
        limit: hk,
        converged: false,
        iterations: opts.max_iter,
        steps,
    })
}

/// `X = U2 U1^{-1}` from an orthonormal basis `[U1; U2]` of the null space of
/// `H_inf + τ_ref I`.
pub fn sign_extract(h_inf: &Matrix, tau_ref: f64) -> Result<HermitianMatrix> {
    let m = h_inf.check_square("H_inf")?;
    if m % 2 != 0 {
        return Err(Error::DimensionMismatch("H_inf must have even size".into()));
    }
    let n = m / 2;
    let shifted = h_inf.shift_diagonal(C64::new(tau_ref, 0.0));
    let svd = SVD::new(shifted.inner().clone(), false, true);
    let sv = &svd.singular_values;
    let cutoff = 1e-8 * sv[0].max(1.0);
    let rank = sv.iter().filter(|&&s| s > cutoff).count();
    if rank != n {
        return Err(Error::RankMismatch { expected: n, found: rank });
    }
    let vt = svd.v_t.expect("requested right vectors");
    let basis = Matrix::from_inner(vt.rows(n, n).adjoint());
    let u1 = basis.block(0, 0, n, n);
    let u2 = basis.block(n, 0, n, n);
    let s1 = SVD::new(u1.inner().clone(), false, false).singular_values;
    let smin = s1.min();
    let condition = if smin > 0.0 { s1.max() / smin } else { f64::INFINITY };
    if !(condition <= 1e8) {
        return Err(Error::SingularU1 { condition });
    }
    let x = Lu::new(&u1)?.solve_right(&u2)?;
    Ok(HermitianMatrix::from_hermitian_part(&x))
}

/// Sign-function solver. The residual history holds the relative sign steps;
/// its last entry is replaced by the CARE residual of the extracted solution.
pub fn sign_solve(p: &CareProblem, opts: &SignOptions) -> Result<DareSolution> {
    let mut tracker = Tracker::new();
    tracker.record(care_residual(&HermitianMatrix::zeros(p.size()), p));
    let h = p.hamiltonian();
    let it = sign_iterate(h.as_matrix(), opts)?;
    for &s in &it.steps[..it.steps.len() - 1] {
        tracker.record_update(s);
        tracker.record(s);
    }
    if !it.converged {
        let x = HermitianMatrix::zeros(p.size());
        tracker.record(*it.steps.last().unwrap_or(&f64::NAN));
        return Ok(DareSolution {
            report: tracker.finish(x.clone(), false, it.iterations),
            x_plus: x,
            y_plus: None,
        });
    }
    let x = sign_extract(&it.limit, 1.0)?;
    tracker.record_update(*it.steps.last().expect("at least one step"));
    tracker.record(care_residual(&x, p));
    Ok(DareSolution {
        report: tracker.finish(x.clone(), true, it.iterations),
        x_plus: x,
        y_plus: None,
    })
}

/// Newton's method from a stabilizing `X0`. Each step solves
/// `(A - GX_k)^* X + X (A - GX_k) = -Q - X_k G X_k` exactly.
pub fn newton_care_solve(p: &CareProblem, x0: &HermitianMatrix, opts: &SolveOptions) -> Result<DareSolution> {
    opts.validate()?;
    let n = p.size();
    if x0.size() != n {
        return Err(Error::DimensionMismatch(format!("X0 is {0}x{0}, A is {n}x{n}", x0.size())));
    }
    let closed = |x: &HermitianMatrix| &p.a - p.g.as_matrix() * x.as_matrix();
    if n <= oracle::eigen_cap() {
        let eigs = oracle::eigenvalues(&closed(x0))?;
        if eigs.iter().any(|l| l.re >= 0.0) {
            return Err(Error::InnerSolveFailed("A - G X0 is not Hurwitz".into()));
        }
    }
    let mut tracker = Tracker::new();
    let mut x = x0.clone();
    tracker.record(care_residual(&x, p));
    if tracker.last_residual() <= opts.tol {
        return Ok(newton_finish(tracker, x, true, 0));
    }
    for k in 1..=opts.max_iter {
        let ak = closed(&x);
        let rhs = HermitianMatrix::from_hermitian_part(&(p.q.as_matrix() + x.as_matrix() * p.g.as_matrix() * x.as_matrix()));
        let next = oracle::kron_lyap_solve_raw(&ak, &rhs).map_err(|e| match e {
            Error::SingularMatrix { .. } => Error::InnerSolveFailed(format!("Lyapunov operator singular at step {k}")),
            other => other,
        })?;
        let update = (next.as_matrix() - x.as_matrix()).frobenius_norm();
        let norm = next.frobenius_norm();
        if !(norm <= OVERFLOW_NORM) {
            return Err(Error::Overflow { iterations: k, norm });
        }
        x = next;
        tracker.record_update(update);
        tracker.record(care_residual(&x, p));
        if tracker.last_residual() <= opts.tol {
            return Ok(newton_finish(tracker, x, true, k));
        }
        if update <= opts.stagnation_tol * norm {
            return Ok(newton_finish(tracker, x, false, k));
        }
    }
    Ok(newton_finish(tracker, x, false, opts.max_iter))
}

fn newton_finish(tracker: Tracker, x: HermitianMatrix, converged: bool, iterations: usize) -> DareSolution {
    DareSolution {
        report: tracker.finish(x.clone(), converged, iterations),
        x_plus: x,
        y_plus: None,
    }
}
