mod common;

use common::*;
use proptest::prelude::*;
use riccati_core::care::{
    care_sda_solve_auto, hamiltonian_defect, CareProblem, newton_care_solve, sign_iterate, sign_solve, SignOptions,
};
use riccati_core::dare::{closed_loop_radius, dare_residual, dare_step, sda_solve, DoublingState};
use riccati_core::error::Error;
use riccati_core::harness::commands::newton_start;
use riccati_core::linalg::{HermitianMatrix, Lu, C64};
use riccati_core::oracle::{self, SymplecticPair};
use riccati_core::report::SolveOptions;

/// `‖S‖_F ‖S^{-1}‖_F` for the Cayley transform `S` of the Hamiltonian.
fn cayley_condition(c: &CareProblem, tau: f64) -> f64 {
    let h = c.hamiltonian().into_matrix();
    let t = C64::new(tau, 0.0);
    let (minus, plus) = (h.shift_diagonal(-t), h.shift_diagonal(t));
    match (Lu::new(&minus), Lu::new(&plus)) {
        (Ok(m), Ok(p)) => m.solve(&plus).unwrap().frobenius_norm() * p.solve(&minus).unwrap().frobenius_norm(),
        _ => f64::INFINITY,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn sda_chains_nondecreasing(n in 1usize..=8, seed in any::<u64>()) {
        let p = dare(n, seed);
        let mut s = DoublingState::new(&p);
        for _ in 0..8 {
            let (q, g) = (s.q.clone(), s.g.clone());
            s.step().unwrap();
            prop_assert!(nondecreasing(&q, &s.q, 1e-10));
            prop_assert!(nondecreasing(&g, &s.g, 1e-10));
        }
    }

    #[test]
    fn sda_is_fixed_point_at_powers_of_two(n in 1usize..=8, seed in any::<u64>()) {
        let p = dare(n, seed);
        let mut s = DoublingState::new(&p);
        let mut x = dare_step(&HermitianMatrix::zeros(n), &p).unwrap();
        let mut done = 1;
        for k in 1..=4 {
            s.step().unwrap();
            while done < 1 << k {
                x = dare_step(&x, &p).unwrap();
                done += 1;
            }
            prop_assert!(rel_h(&s.q, &x) <= 1e-9);
        }
    }

    #[test]
    fn stabilizing_and_dual(n in 1usize..=8, seed in any::<u64>()) {
        let p = dare(n, seed);
        let sol = sda_solve(&p, &SolveOptions::doubling()).unwrap();
        prop_assert!(sol.report.converged);
        prop_assert!(closed_loop_radius(&sol.x_plus, &p).unwrap() < 1.0);
        let dual = sda_solve(&p.dual(), &SolveOptions::doubling()).unwrap();
        prop_assert!(rel_h(&dual.x_plus, sol.y_plus.as_ref().unwrap()) <= 1e-10);
        prop_assert!(rel_h(dual.y_plus.as_ref().unwrap(), &sol.x_plus) <= 1e-10);
    }

    #[test]
    fn invariant_subspace_matches_sda(n in 1usize..=8, seed in any::<u64>()) {
        let p = dare(n, seed);
        let x = oracle::dare_oracle(&p).unwrap();
        let y = sda_solve(&p, &SolveOptions::doubling()).unwrap().x_plus;
        prop_assert!(rel_h(&y, &x) <= 1e-8);
        let c = care(n, seed);
        let x = oracle::care_oracle(&c).unwrap();
        let y = care_sda_solve_auto(&c, &SolveOptions::doubling()).unwrap().x_plus;
        prop_assert!(rel_h(&y, &x) <= 1e-8);
    }

    #[test]
    fn spectra_pair_up(n in 1usize..=6, seed in any::<u64>()) {
        let p = dare(n, seed);
        let s = SymplecticPair::from_dare(&p).unwrap();
        if f64::EPSILON * s.s.frobenius_norm().powi(2) <= 1e-9 {
            s.check().unwrap();
        }
        let eigs = oracle::pencil_eigenvalues(&p.a, p.g.as_matrix(), p.q.as_matrix()).unwrap();
        prop_assert!(oracle::symplectic_pairing_defect(&eigs) <= 1e-6);
        let h = care(n, seed).hamiltonian();
        prop_assert!(oracle::hamiltonian_pairing_defect(&oracle::eigenvalues(h.as_matrix()).unwrap()) <= 1e-6);
    }

    #[test]
    fn sign_relation(n in 1usize..=4, seed in any::<u64>(), k in 1usize..=2) {
        let c = care(n, seed);
        let tau = riccati_core::care::default_cayley_tau(&c);
        prop_assume!(cayley_condition(&c, tau).powi(1 << k) <= 1e10);
        let check = oracle::sign_relation_check(&c, tau, k);
        prop_assume!(!matches!(check, Err(Error::OverflowGuard { .. })));
        prop_assert!(check.unwrap() <= 1e-8);
    }

    #[test]
    fn unscaled_sign_iterates_stay_hamiltonian(n in 1usize..=6, seed in any::<u64>()) {
        let h = care(n, seed).hamiltonian();
        for k in 1..=12 {
            let opts = SignOptions { max_iter: k, tol: 1e-300, ..SignOptions::unscaled() };
            let it = sign_iterate(h.as_matrix(), &opts).unwrap();
            prop_assert!(hamiltonian_defect(&it.limit) <= 1e-8);
            if it.iterations < k {
                break;
            }
        }
    }

    #[test]
    fn newton_decreases_from_stabilizing_start(n in 1usize..=8, seed in any::<u64>()) {
        let c = care(n, seed);
        let x0 = newton_start(&c).unwrap();
        let mut iterates = Vec::new();
        for k in 1..=10 {
            let sol = newton_care_solve(&c, &x0, &SolveOptions::doubling().with_tol(1e-300).with_max_iter(k)).unwrap();
            let stop = sol.report.iterations < k;
            iterates.push(sol.x_plus);
            if stop {
                break;
            }
        }
        let xp = oracle::care_oracle(&c).unwrap();
        for w in iterates.windows(2) {
            prop_assert!(nondecreasing(&w[1], &w[0], 1e-10));
        }
        prop_assert!(nondecreasing(&xp, &iterates[0], 1e-10));
    }

    #[test]
    fn care_methods_agree(n in 1usize..=10, seed in any::<u64>()) {
        let c = care(n, seed);
        let sda = care_sda_solve_auto(&c, &SolveOptions::doubling()).unwrap().x_plus;
        let det = sign_solve(&c, &SignOptions::default()).unwrap().x_plus;
        let plain = sign_solve(&c, &SignOptions::unscaled()).unwrap().x_plus;
        let newton = newton_care_solve(&c, &newton_start(&c).unwrap(), &SolveOptions::doubling()).unwrap().x_plus;
        prop_assert!(rel_h(&det, &plain) <= 1e-8);
        for (a, b) in [(&sda, &det), (&sda, &newton), (&det, &newton)] {
            prop_assert!(rel_h(a, b) <= 1e-7);
        }
    }
}

/// With semidefinite data the unit mode sits in the unobservable part, so the
/// primal residual collapses quickly while the dual half of the doubling
/// state converges linearly with rate one half.
#[test]
fn critical_dare_state_residual_halves() {
    for seed in 0..6 {
        for n in [1usize, 2, 3, 5] {
            let p = critical_dare(n, seed);
            let d = p.dual();
            let mut s = DoublingState::new(&p);
            let mut res = Vec::new();
            for _ in 0..18 {
                s.step().unwrap();
                res.push(dare_residual(&s.q, &p).unwrap().max(dare_residual(&s.g, &d).unwrap()));
            }
            let ratios: Vec<f64> = res[10..].windows(2).map(|w| w[1] / w[0]).collect();
            let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
            assert!((0.4..=0.6).contains(&mean), "n={n} seed={seed}: {mean}");
            assert!(dare_residual(&s.q, &p).unwrap() <= 1e-12);
        }
    }
}
