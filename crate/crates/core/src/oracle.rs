//! Brute-force reference computations used to cross-check the iterative
//! solvers: Kronecker-vectorized linear solves, invariant subspaces from a
//! full eigendecomposition, explicitly formed matrix powers, and explicit
//! Schur complements of a block tridiagonal matrix.
//!
//! Everything here is sized for verification only; see [`kron_cap`] and
//! [`eigen_cap`].

use nalgebra::{Schur, SVD};

use crate::care::{CareProblem, HamiltonianMatrix};
use crate::dare::{symplectic_matrix, DareProblem, DoublingState};
use crate::error::{Error, Result};
use crate::linalg::{HermitianMatrix, Lu, Matrix, C64};
use crate::lyap::LyapunovProblem;
use crate::nme::{CrState, NmeProblem};
use crate::report::ratio;
use crate::stein::SteinProblem;

pub const KRON_CAP: usize = 40;
pub const EIGEN_CAP: usize = 20;
pub const CAP_ENV: &str = "RICCATI_ORACLE_CAP";

/// Largest explicit power norm the power-based checks accept.
pub const POWER_GUARD: f64 = 1e12;

fn env_cap() -> Option<usize> {
    std::env::var(CAP_ENV).ok().and_then(|v| v.trim().parse().ok())
}

/// Size cap for Kronecker solves, overridable through `RICCATI_ORACLE_CAP`.
pub fn kron_cap() -> usize {
    env_cap().unwrap_or(KRON_CAP)
}

/// Size cap (of `n`, for `2n × 2n` inputs) for eigendecompositions,
/// overridable through `RICCATI_ORACLE_CAP`.
pub fn eigen_cap() -> usize {
    env_cap().unwrap_or(EIGEN_CAP)
}

fn check_cap(n: usize, cap: usize) -> Result<()> {
    if n > cap {
        return Err(Error::TooLarge { n, cap });
    }
    Ok(())
}

/// Column-major `vec`.
fn vectorize(m: &Matrix) -> Matrix {
    let n = m.rows();
    let mut v = Matrix::zeros(n * m.cols(), 1);
    for j in 0..m.cols() {
        for i in 0..n {
            v.set(j * n + i, 0, m.get(i, j));
        }
    }
    v
}

fn unvectorize(v: &Matrix, n: usize) -> Matrix {
    let mut m = Matrix::zeros(n, n);
    for j in 0..n {
        for i in 0..n {
            m.set(i, j, v.get(j * n + i, 0));
        }
    }
    m
}

/// `I - A^T ⊗ A^*` when `stein`, else `I ⊗ A^* + A^T ⊗ I`.
fn kron_operator(a: &Matrix, stein: bool) -> Matrix {
    let n = a.rows();
    let mut k = Matrix::zeros(n * n, n * n);
    let one = C64::new(1.0, 0.0);
    for p in 0..n {
        for q in 0..n {
            let apq = a.get(q, p);
            for i in 0..n {
                for j in 0..n {
                    let ah_ij = a.get(j, i).conj();
                    let val = if stein {
                        let delta = if p == q && i == j { one } else { C64::new(0.0, 0.0) };
                        delta - apq * ah_ij
                    } else {
                        let mut v = C64::new(0.0, 0.0);
                        if p == q {
                            v += ah_ij;
                        }
                        if i == j {
                            v += apq;
                        }
                        v
                    };
                    k.set(p * n + i, q * n + j, val);
                }
            }
        }
    }
    k
}

/// Solves `(I - A^T ⊗ A^*) vec(X) = vec(Q)`.
pub fn kron_stein_solve(p: &SteinProblem) -> Result<HermitianMatrix> {
    let n = p.size();
    check_cap(n, kron_cap())?;
    let x = Lu::new(&kron_operator(&p.a, true))?.solve(&vectorize(p.q.as_matrix()))?;
    Ok(HermitianMatrix::from_hermitian_part(&unvectorize(&x, n)))
}

/// Solves `(I ⊗ A^* + A^T ⊗ I) vec(X) = -vec(Q)`.
pub fn kron_lyap_solve(p: &LyapunovProblem) -> Result<HermitianMatrix> {
    kron_lyap_solve_raw(&p.a, &p.q)
}

/// [`kron_lyap_solve`] without the semidefiniteness requirement on `Q`.
pub fn kron_lyap_solve_raw(a: &Matrix, q: &HermitianMatrix) -> Result<HermitianMatrix> {
    let n = a.check_square("A")?;
    check_cap(n, kron_cap())?;
    let rhs = -vectorize(q.as_matrix());
    let x = Lu::new(&kron_operator(a, false))?.solve(&rhs)?;
    Ok(HermitianMatrix::from_hermitian_part(&unvectorize(&x, n)))
}

/// Eigenvalues from a complex Schur decomposition.
///
/// The QR sweep can cycle on real input with symmetric spectra; the
/// decomposition is then retried on `e^{iθ} M` and the eigenvalues rotated
/// back.
pub fn eigenvalues(m: &Matrix) -> Result<Vec<C64>> {
    let size = m.check_square("eigenvalue input")?;
    check_cap(size, 2 * eigen_cap())?;
    for theta in [0.0, 0.3, 0.7, 1.1] {
        let phase = C64::from_polar(1.0, theta);
        if let Some(schur) = Schur::try_new(m.inner().clone() * phase, f64::EPSILON, 100_000) {
            let (_, t) = schur.unpack();
            return Ok(t.diagonal().iter().map(|&z| z / phase).collect());
        }
    }
    Err(Error::NotConverged {
        iterations: 100_000,
        residual: f64::NAN,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Region {
    InsideUnitCircle,
    LeftHalfPlane,
}

/// Eigenvalues within this distance of the region boundary count as outside.
pub const REGION_MARGIN: f64 = 1e-8;

impl Region {
    pub fn strictly_contains(self, z: C64) -> bool {
        match self {
            Region::InsideUnitCircle => z.norm() < 1.0 - REGION_MARGIN,
            Region::LeftHalfPlane => z.re < -REGION_MARGIN,
        }
    }
}

/// Groups nearby eigenvalues; returns `(center, multiplicity)` pairs.
fn clusters(eigs: &[C64], tol: f64) -> Vec<(C64, usize)> {
    let mut groups: Vec<Vec<C64>> = Vec::new();
    for &z in eigs {
        match groups.iter_mut().find(|g| g.iter().any(|w| (w - z).norm() <= tol)) {
            Some(g) => g.push(z),
            None => groups.push(vec![z]),
        }
    }
    groups
        .into_iter()
        .map(|g| {
            let m = g.len();
            (g.iter().sum::<C64>() / m as f64, m)
        })
        .collect()
}

/// Right singular vectors of the `count` smallest singular values.
fn null_basis(m: &Matrix, count: usize) -> Matrix {
    let cols = m.cols();
    let svd = SVD::new(m.inner().clone(), false, true);
    let vt = svd.v_t.expect("requested right vectors");
    Matrix::from_inner(vt.rows(cols - count, count).adjoint())
}

/// Orthonormal basis of the span of the columns of `b`.
fn orthonormalize(b: &Matrix) -> Matrix {
    let svd = SVD::new(b.inner().clone(), true, false);
    Matrix::from_inner(svd.u.expect("requested left vectors"))
}

/// `X = U2 U1^{-1}` for the invariant subspace `[U1; U2]` of `M` belonging to
/// the eigenvalues strictly inside `region`.
pub fn invariant_subspace_solve(m: &Matrix, region: Region) -> Result<HermitianMatrix> {
    let size = m.check_square("M")?;
    if size % 2 != 0 {
        return Err(Error::DimensionMismatch("M must have even size".into()));
    }
    let n = size / 2;
    check_cap(n, eigen_cap())?;
    let eigs = eigenvalues(m)?;
    let inside: Vec<C64> = eigs.iter().copied().filter(|&z| region.strictly_contains(z)).collect();
    if inside.len() != n {
        return Err(Error::RegionCountMismatch {
            expected: n,
            found: inside.len(),
        });
    }
    let scale = eigs.iter().map(|z| z.norm()).fold(1.0, f64::max);
    let mut parts = Vec::new();
    for (center, mult) in clusters(&inside, 1e-6 * scale) {
        let shifted = m.shift_diagonal(-center);
        let mut power = shifted.clone();
        for _ in 1..mult {
            power = &power * &shifted;
        }
        parts.push(null_basis(&power, mult));
    }
    let refs: Vec<&Matrix> = parts.iter().collect();
    let basis = orthonormalize(&Matrix::hstack(&refs)?);
    let u1 = basis.block(0, 0, n, n);
    let u2 = basis.block(n, 0, n, n);
    let s = SVD::new(u1.inner().clone(), false, false).singular_values;
    let condition = if s.min() > 0.0 { s.max() / s.min() } else { f64::INFINITY };
    if !(condition <= 1e8) {
        return Err(Error::SingularU1 { condition });
    }
    let x = Lu::new(&u1)?.solve_right(&u2)?;
    Ok(HermitianMatrix::from_hermitian_part(&x))
}

/// `M = [A 0; -Q I]` and `L = [I G; 0 A^*]` of the pencil `M - λL`.
fn dare_pencil(a: &Matrix, g: &Matrix, q: &Matrix) -> Result<(Matrix, Matrix)> {
    let n = a.check_square("A")?;
    let z = Matrix::zeros(n, n);
    let i = Matrix::identity(n);
    Ok((Matrix::from_blocks(a, &z, &-q, &i)?, Matrix::from_blocks(&i, g, &z, &a.adjoint())?))
}

/// `(M - L)^{-1}(M + L)`: maps the pencil eigenvalues by `λ ↦ (λ+1)/(λ-1)`,
/// the unit disk onto the left half-plane, without inverting `A`.
fn cayley_pencil(a: &Matrix, g: &Matrix, q: &Matrix) -> Result<Matrix> {
    let (m, l) = dare_pencil(a, g, q)?;
    Lu::new(&(&m - &l))?.solve(&(&m + &l))
}

/// Eigenvalues of the pencil `M - λL`, through the Cayley transform when
/// `M - L` is nonsingular and through the symplectic matrix otherwise.
pub fn pencil_eigenvalues(a: &Matrix, g: &Matrix, q: &Matrix) -> Result<Vec<C64>> {
    check_cap(a.rows(), eigen_cap())?;
    match cayley_pencil(a, g, q) {
        Ok(h) => {
            let one = C64::new(1.0, 0.0);
            Ok(eigenvalues(&h)?.into_iter().map(|mu| (mu + one) / (mu - one)).collect())
        }
        Err(Error::SingularMatrix { .. }) => eigenvalues(&symplectic_matrix(a, g, q)?),
        Err(e) => Err(e),
    }
}

/// Stabilizing DARE solution from the stable deflating subspace of the
/// pencil, falling back to the symplectic matrix when `M - L` is singular.
pub fn dare_oracle(p: &DareProblem) -> Result<HermitianMatrix> {
    let (a, g, q) = (&p.a, p.g.as_matrix(), p.q.as_matrix());
    match cayley_pencil(a, g, q) {
        Ok(h) => invariant_subspace_solve(&h, Region::LeftHalfPlane),
        Err(Error::SingularMatrix { .. }) => invariant_subspace_solve(&symplectic_matrix(a, g, q)?, Region::InsideUnitCircle),
        Err(e) => Err(e),
    }
}

/// Stabilizing CARE solution from the Hamiltonian matrix.
pub fn care_oracle(p: &CareProblem) -> Result<HermitianMatrix> {
    invariant_subspace_solve(p.hamiltonian().as_matrix(), Region::LeftHalfPlane)
}

/// `S = [I G; 0 A^*]^{-1} [A 0; -Q I]` together with `J = [0 I; -I 0]`.
#[derive(Clone, Debug)]
pub struct SymplecticPair {
    pub s: Matrix,
    pub j: Matrix,
}

impl SymplecticPair {
    /// Assembles `S` from raw blocks; `G` and `Q` need not be semidefinite.
    pub fn assemble(a: &Matrix, g: &Matrix, q: &Matrix) -> Result<Self> {
        let s = symplectic_matrix(a, g, q)?;
        let j = crate::care::symplectic_unit(a.rows());
        Ok(Self { s, j })
    }

    pub fn from_dare(p: &DareProblem) -> Result<Self> {
        Self::assemble(&p.a, p.g.as_matrix(), p.q.as_matrix())
    }

    /// `‖S^*JS - J‖_F / ‖J‖_F`.
    pub fn defect(&self) -> f64 {
        let r = self.s.adjoint() * &self.j * &self.s - &self.j;
        r.frobenius_norm() / self.j.frobenius_norm()
    }

    pub fn check(&self) -> Result<()> {
        let d = self.defect();
        if d > 1e-8 {
            return Err(Error::StructureLoss(format!("symplectic defect {d:.3e}")));
        }
        Ok(())
    }
}

/// Largest relative distance between `f(λ)` and its nearest unused partner
/// in the spectrum, matched greedily.
fn pairing_defect(eigs: &[C64], f: impl Fn(C64) -> C64) -> f64 {
    let mut used = vec![false; eigs.len()];
    let mut worst: f64 = 0.0;
    for &z in eigs {
        let target = f(z);
        if !target.is_finite() {
            return f64::INFINITY;
        }
        let best = (0..eigs.len())
            .filter(|&i| !used[i])
            .min_by(|&i, &j| (eigs[i] - target).norm().total_cmp(&(eigs[j] - target).norm()));
        match best {
            Some(i) => {
                used[i] = true;
                worst = worst.max((eigs[i] - target).norm() / target.norm().max(1.0));
            }
            None => return f64::INFINITY,
        }
    }
    worst
}

/// Defect of the pairing `λ ↦ 1/λ̄`.
pub fn symplectic_pairing_defect(eigs: &[C64]) -> f64 {
    pairing_defect(eigs, |z| C64::new(1.0, 0.0) / z.conj())
}

/// Defect of the pairing `λ ↦ -λ̄`.
pub fn hamiltonian_pairing_defect(eigs: &[C64]) -> f64 {
    pairing_defect(eigs, |z| -z.conj())
}

fn guard_power(base_norm: f64, k: usize) -> Result<()> {
    let log_bound = 2f64.powi(k as i32) * base_norm.ln();
    if log_bound > POWER_GUARD.ln() {
        return Err(Error::OverflowGuard { bound: log_bound.exp() });
    }
    Ok(())
}

fn square_times(m: &Matrix, k: usize) -> Matrix {
    let mut p = m.clone();
    for _ in 0..k {
        p = &p * &p;
    }
    p
}

/// `‖S^{-2^k} - [A_k 0; -Q_k I]^{-1} [I G_k; 0 A_k^*]‖_F / ‖S^{-2^k}‖_F`,
/// with the power formed by repeated squaring of `S^{-1}`.
pub fn sda_factorization_check(state: &DoublingState, p: &DareProblem) -> Result<f64> {
    let n = p.size();
    let i = Matrix::identity(n);
    let z = Matrix::zeros(n, n);
    let factor = |a: &Matrix, g: &Matrix, q: &Matrix| -> Result<Matrix> {
        let left = Matrix::from_blocks(a, &z, &-q, &i)?;
        let right = Matrix::from_blocks(&i, g, &z, &a.adjoint())?;
        Lu::new(&left)?.solve(&right)
    };
    let s_inv = factor(&p.a, p.g.as_matrix(), p.q.as_matrix())?;
    guard_power(s_inv.frobenius_norm(), state.k)?;
    let power = square_times(&s_inv, state.k);
    let fk = factor(&state.a, state.g.as_matrix(), state.q.as_matrix())?;
    Ok(ratio((&power - fk).frobenius_norm(), power.frobenius_norm()))
}

/// `c(M) = (M - τI)^{-1}(M + τI)`.
fn cayley(m: &Matrix, tau: f64) -> Result<Matrix> {
    let t = C64::new(tau, 0.0);
    Lu::new(&m.shift_diagonal(-t))?.solve(&m.shift_diagonal(t))
}

/// `‖c(H_k) - S^{2^k}‖_F / ‖S^{2^k}‖_F` with `S = c(H)` and
/// `H_{j+1} = ½(H_j + τ² H_j^{-1})`.
pub fn sign_relation_check(p: &CareProblem, tau: f64, k: usize) -> Result<f64> {
    sign_relation_check_matrix(p.hamiltonian().as_matrix(), tau, k)
}

/// [`sign_relation_check`] for an arbitrary square `H`.
pub fn sign_relation_check_matrix(h: &Matrix, tau: f64, k: usize) -> Result<f64> {
    if !(tau > 0.0) {
        return Err(Error::InvalidShift { re: tau, im: 0.0 });
    }
    let s = cayley(h, tau)?;
    guard_power(s.frobenius_norm(), k)?;
    let power = square_times(&s, k);
    let mut hk = h.clone();
    for _ in 0..k {
        let inv = Lu::new(&hk)?.inverse();
        hk = (hk + inv.scale_real(tau * tau)).scale_real(0.5);
    }
    let ck = cayley(&hk, tau)?;
    Ok(ratio((&power - ck).frobenius_norm(), power.frobenius_norm()))
}

/// Block tridiagonal `mn × mn` matrix with `Q` on the diagonal, `A^*` below
/// and `A` above it.
pub fn assemble_tridiagonal(p: &NmeProblem, m: usize) -> Matrix {
    let n = p.size();
    let mut t = Matrix::zeros(m * n, m * n);
    let ah = p.a.adjoint();
    for b in 0..m {
        t.set_block(b * n, b * n, p.q.as_matrix());
        if b + 1 < m {
            t.set_block(b * n, (b + 1) * n, &p.a);
            t.set_block((b + 1) * n, b * n, &ah);
        }
    }
    t
}

fn gather(t: &Matrix, rows: &[usize], cols: &[usize], n: usize) -> Matrix {
    let mut out = Matrix::zeros(rows.len() * n, cols.len() * n);
    for (bi, &r) in rows.iter().enumerate() {
        for (bj, &c) in cols.iter().enumerate() {
            out.set_block(bi * n, bj * n, &t.block(r * n, c * n, n, n));
        }
    }
    out
}

/// Explicit Schur complement of the odd-numbered block rows and columns
/// (first, third, ...) of an `m`-block tridiagonal.
fn eliminate_odd(t: &Matrix, n: usize) -> Result<Matrix> {
    let m = t.rows() / n;
    let odd: Vec<usize> = (0..m).step_by(2).collect();
    let even: Vec<usize> = (1..m).step_by(2).collect();
    let too = gather(t, &odd, &odd, n);
    let toe = gather(t, &odd, &even, n);
    let teo = gather(t, &even, &odd, n);
    let tee = gather(t, &even, &even, n);
    Ok(tee - teo * Lu::new(&too)?.solve(&toe)?)
}

/// Reads `(A_k, Q_k, U_k)` off the tridiagonal obtained by `levels`
/// successive odd-block eliminations of the `m`-block assembly.
pub fn tridiag_schur_levels(p: &NmeProblem, m: usize, levels: usize) -> Result<CrState> {
    if !m.is_power_of_two() || m > 16 || levels == 0 || m >> levels < 2 {
        return Err(Error::InvalidSpec(format!("{levels} eliminations of a {m}-block tridiagonal")));
    }
    let n = p.size();
    let mut t = assemble_tridiagonal(p, m);
    for _ in 0..levels {
        t = eliminate_odd(&t, n)?;
    }
    let blocks = t.rows() / n;
    let u = t.block(0, 0, n, n);
    let a = t.block(0, n, n, n);
    let q = t.block((blocks - 1) * n, (blocks - 1) * n, n, n);
    Ok(CrState {
        a,
        q: HermitianMatrix::from_hermitian_part(&q),
        u: HermitianMatrix::from_hermitian_part(&u),
        k: levels,
    })
}

/// One explicit elimination; needs `m >= 4` so that an interior block
/// survives.
pub fn tridiag_schur_oracle(p: &NmeProblem, m: usize) -> Result<CrState> {
    if m < 4 {
        return Err(Error::InvalidSpec(format!("tridiagonal needs at least 4 blocks, got {m}")));
    }
    tridiag_schur_levels(p, m, 1)
}

/// Hamiltonian structure of `h` as a checked wrapper.
pub fn hamiltonian_check(h: &Matrix) -> Result<HamiltonianMatrix> {
    HamiltonianMatrix::from_matrix(h.clone())
}
