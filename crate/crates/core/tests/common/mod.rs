#![allow(dead_code)]

use riccati_core::care::CareProblem;
use riccati_core::dare::DareProblem;
use riccati_core::harness::{gen_problem, GeneratorSpec, ProblemKind};
use riccati_core::linalg::{HermitianMatrix, Matrix, C64};
use riccati_core::lyap::LyapunovProblem;
use riccati_core::nme::NmeProblem;
use riccati_core::stein::SteinProblem;

pub fn spec(kind: ProblemKind, n: usize, seed: u64) -> GeneratorSpec {
    GeneratorSpec::new(kind, n, seed)
}

pub fn stein(n: usize, seed: u64, r: f64) -> SteinProblem {
    gen_problem(&spec(ProblemKind::Stein, n, seed).with_r(r)).unwrap().stein().unwrap()
}

pub fn lyapunov(n: usize, seed: u64, a: f64, b: f64, p: usize) -> LyapunovProblem {
    let s = spec(ProblemKind::Lyapunov, n, seed).with_interval(a, b).with_rank(p);
    gen_problem(&s).unwrap().lyapunov().unwrap()
}

pub fn dare(n: usize, seed: u64) -> DareProblem {
    gen_problem(&spec(ProblemKind::Dare, n, seed)).unwrap().dare().unwrap()
}

pub fn critical_dare(n: usize, seed: u64) -> DareProblem {
    gen_problem(&spec(ProblemKind::Dare, n, seed).critical()).unwrap().dare().unwrap()
}

pub fn care(n: usize, seed: u64) -> CareProblem {
    gen_problem(&spec(ProblemKind::Care, n, seed)).unwrap().care().unwrap()
}

pub fn nme(n: usize, seed: u64) -> NmeProblem {
    gen_problem(&spec(ProblemKind::Nme, n, seed)).unwrap().nme().unwrap()
}

pub fn real(v: f64) -> C64 {
    C64::new(v, 0.0)
}

pub fn scalar(v: f64) -> Matrix {
    Matrix::scalar(real(v))
}

pub fn herm(v: f64) -> HermitianMatrix {
    HermitianMatrix::from_real_diagonal(&[v])
}

/// `‖x - y‖_F / ‖y‖_F`.
pub fn rel(x: &Matrix, y: &Matrix) -> f64 {
    (x - y).frobenius_norm() / y.frobenius_norm().max(f64::MIN_POSITIVE)
}

pub fn rel_h(x: &HermitianMatrix, y: &HermitianMatrix) -> f64 {
    rel(x.as_matrix(), y.as_matrix())
}

pub fn value(x: &HermitianMatrix) -> f64 {
    x.get(0, 0).re
}

/// `next - prev ⪰ 0` per `psd_check` at `tol`.
pub fn nondecreasing(prev: &HermitianMatrix, next: &HermitianMatrix, tol: f64) -> bool {
    let d = HermitianMatrix::from_hermitian_part(&(next.as_matrix() - prev.as_matrix()));
    riccati_core::linalg::psd_check(&d, tol)
}
