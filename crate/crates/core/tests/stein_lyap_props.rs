mod common;

use common::*;
use proptest::prelude::*;
use riccati_core::linalg::{psd_check, HermitianMatrix, Matrix, C64};
use riccati_core::lyap::{
    adi_solve, cayley_to_stein, lr_adi_solve, lyap_residual, wachspress_single_shift, ShiftSequence,
};
use riccati_core::oracle;
use riccati_core::report::SolveOptions;
use riccati_core::stein::{smith_solve, smith_step, squared_smith_solve, SquaredSmithState};

fn power(a: &Matrix, k: usize) -> Matrix {
    let mut p = Matrix::identity(a.rows());
    for _ in 0..k {
        p = p * a;
    }
    p
}

fn steps(k: usize) -> SolveOptions {
    SolveOptions::basic().with_tol(1e-300).with_max_iter(k)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn smith_monotone(n in 1usize..=10, seed in any::<u64>()) {
        let p = stein(n, seed, 0.9);
        let mut x = HermitianMatrix::zeros(n);
        for _ in 0..80 {
            let next = smith_step(&x, &p);
            let d = HermitianMatrix::from_hermitian_part(&(next.as_matrix() - x.as_matrix()));
            prop_assert!(psd_check(&d, 1e-10 * next.frobenius_norm()));
            x = next;
        }
    }

    #[test]
    fn smith_error_identity(n in 1usize..=10, seed in any::<u64>(), k in 0usize..30) {
        let p = stein(n, seed, 0.9);
        let x = oracle::kron_stein_solve(&p).unwrap();
        let mut xk = HermitianMatrix::zeros(n);
        for _ in 0..k {
            xk = smith_step(&xk, &p);
        }
        let ak = power(&p.a, k);
        let predicted = ak.adjoint() * x.as_matrix() * &ak;
        let gap = (x.as_matrix() - xk.as_matrix() - predicted).frobenius_norm();
        prop_assert!(gap <= 1e-9 * x.frobenius_norm(), "gap {gap:e}");
    }

    #[test]
    fn squared_smith_is_smith_at_powers_of_two(n in 1usize..=10, seed in any::<u64>()) {
        let p = stein(n, seed, 0.9);
        let mut state = SquaredSmithState::new(&p);
        let mut x = smith_step(&HermitianMatrix::zeros(n), &p);
        let mut done = 1;
        for k in 1..=5 {
            state.step();
            while done < 1 << k {
                x = smith_step(&x, &p);
                done += 1;
            }
            prop_assert!(rel_h(&state.q, &x) <= 1e-10);
        }
    }

    #[test]
    fn quadratic_vs_linear_residuals(n in 1usize..=8, seed in any::<u64>()) {
        let p = stein(n, seed, 0.9);
        let basic = smith_solve(&p, &steps(64)).unwrap().residual_history;
        let doubling = squared_smith_solve(&p, &SolveOptions::doubling().with_tol(1e-300).with_max_iter(6)).unwrap().residual_history;
        for k in 0..=6 {
            let (r2, r1) = (doubling[k], basic[1 << k]);
            if r1 > 1e-14 {
                prop_assert!((0.1..=10.0).contains(&(r2 / r1)), "k={k}: {r2:e} vs {r1:e}");
            }
        }
    }

    #[test]
    fn kronecker_matches_squared_smith(n in 1usize..=10, seed in any::<u64>()) {
        let p = stein(n, seed, 0.9);
        let x = oracle::kron_stein_solve(&p).unwrap();
        let y = squared_smith_solve(&p, &SolveOptions::doubling()).unwrap().x;
        prop_assert!(rel_h(&y, &x) <= 1e-9);
    }

    #[test]
    fn adi_error_identity(n in 1usize..=8, seed in any::<u64>(), k in 1usize..=3, base in 0.5f64..5.0) {
        let p = lyapunov(n, seed, 1.0, 20.0, n);
        let x = oracle::kron_lyap_solve(&p).unwrap();
        let shifts: Vec<C64> = (0..k).map(|j| C64::new(base * (1 + 2 * j) as f64, 0.3 * j as f64)).collect();
        let xk = adi_solve(&p, &ShiftSequence::new(shifts.clone()).unwrap(), &steps(k)).unwrap().x;
        let mut r = Matrix::identity(n);
        for &t in &shifts {
            r = r * cayley_to_stein(&p, t).unwrap().a;
        }
        let e = x.as_matrix() - xk.as_matrix();
        let gap = (e - r.adjoint() * x.as_matrix() * &r).frobenius_norm();
        prop_assert!(gap <= 1e-9 * x.frobenius_norm(), "gap {gap:e}");
    }

    #[test]
    fn single_shift_adi_is_smith_on_cayley(n in 1usize..=8, seed in any::<u64>(), re in 0.2f64..20.0, im in -3.0f64..3.0, k in 1usize..12) {
        let p = lyapunov(n, seed, 1.0, 10.0, n);
        let tau = C64::new(re, im);
        let adi = adi_solve(&p, &ShiftSequence::new(vec![tau]).unwrap(), &steps(k)).unwrap().x;
        let smith = smith_solve(&cayley_to_stein(&p, tau).unwrap(), &steps(k)).unwrap().x;
        prop_assert!(rel_h(&adi, &smith) <= 1e-10);
    }

    #[test]
    fn lr_adi_residual_decays(n in 2usize..=12, seed in any::<u64>()) {
        let p = lyapunov(n, seed, 1.0, 100.0, 1);
        let tau = wachspress_single_shift(1.0, 100.0).unwrap();
        let shifts = ShiftSequence::single(tau).unwrap();
        let f = lr_adi_solve(&p, &shifts, 12, &steps(12)).unwrap();
        let res: Vec<f64> = (1..=f.blocks()).map(|j| lyap_residual(&f.prefix_product(j), &p)).collect();
        for w in res.windows(2) {
            if w[0] > 1e-13 {
                prop_assert!(w[1] <= 0.9 * w[0], "{:e} -> {:e}", w[0], w[1]);
            }
        }
        for j in 1..f.blocks() {
            prop_assert!(nondecreasing(&f.prefix_product(j), &f.prefix_product(j + 1), 1e-10));
        }
    }

    #[test]
    fn lr_adi_matches_adi(n in 1usize..=8, seed in any::<u64>()) {
        let p = lyapunov(n, seed, 1.0, 10.0, 1);
        let shifts = ShiftSequence::new(vec![C64::new(1.0, 0.0), C64::new(2.0, 1.0)]).unwrap();
        let f = lr_adi_solve(&p, &shifts, 2, &steps(2)).unwrap();
        let x = adi_solve(&p, &shifts, &steps(2)).unwrap().x;
        prop_assert!((f.product().as_matrix() - x.as_matrix()).frobenius_norm() <= 1e-10 * x.frobenius_norm().max(1.0));
    }

    #[test]
    fn kronecker_matches_adi(n in 1usize..=8, seed in any::<u64>()) {
        let p = lyapunov(n, seed, 1.0, 10.0, n);
        let x = oracle::kron_lyap_solve(&p).unwrap();
        let shifts = ShiftSequence::single(wachspress_single_shift(1.0, 10.0).unwrap()).unwrap();
        let y = adi_solve(&p, &shifts, &SolveOptions::basic()).unwrap().x;
        prop_assert!(rel_h(&y, &x) <= 1e-7);
    }
}
