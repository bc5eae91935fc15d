//! Seeded random instances.
//!
//! The stream is SplitMix64: `state += 0x9E3779B97F4A7C15`, then
//! `z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9`,
//! `z = (z ^ (z >> 27)) * 0x94D049BB133111EB`, output `z ^ (z >> 31)`
//! (wrapping arithmetic). A uniform double in `[0, 1)` is `(z >> 11) * 2^-53`,
//! and every random matrix entry is `2u - 1`, drawn in row-major order.
//! Matrices are drawn in the order they are listed for each kind below.
//!
//! - stein: `R` (n×n), `C` (p×n). `A = R · r / ρ̂(R)`, `Q = C^T C`.
//! - lyapunov: `M` (n×n), the interior eigenvalues `u` (n-2 draws), `N` (n×n,
//!   only when `nonnormal > 0`), `C` (p×n). `U` is the Q factor of `M`,
//!   `D = diag(a, a + (b-a)u_1, ..., b)`, `A = -U (D + η triu(N, 1)) U^T`.
//! - dare: `R`, `B` (n×p), `C` (p×n). `A = R · r / ρ̂(R)`, `G = B B^T`,
//!   `Q = C^T C`. Critical: `W` (1×(n-1)) and `R` ((n-1)×(n-1)) when n > 1,
//!   then `B`, `C`, `M` (n×n). `A_0 = [1 W; 0 R·0.6/ρ̂(R)]`, the first column of `C` is zeroed,
//!   and `A, G, Q` are conjugated by the Q factor of `M`.
//! - care: `R`, `B`, `C`. `A = R - (ρ̂(R) + 0.5) I`.
//! - nme: `R`, `C`. `A = R · r / (2‖R‖_F)`, `Q = I + C^T C / p`. Critical:
//!   `A = I`, `Q = 2I`, no draws.

use std::collections::BTreeMap;

use super::problem::{Metadata, ProblemFile, ProblemKind};
use crate::error::{Error, Result};
use crate::linalg::{spectral_radius_estimate, Matrix, C64, RADIUS_DOUBLINGS};

pub const GENERATOR_NAME: &str = "splitmix64-uniform";

#[derive(Clone, Debug)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform in `[0, 1)`.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Real matrix with entries uniform in `[-1, 1)`.
    pub fn matrix(&mut self, rows: usize, cols: usize) -> Matrix {
        let entries = (0..rows * cols)
            .map(|_| C64::new(2.0 * self.next_f64() - 1.0, 0.0))
            .collect();
        Matrix::new(rows, cols, entries).expect("finite entries")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GeneratorSpec {
    pub kind: ProblemKind,
    pub n: usize,
    pub seed: u64,
    /// Target spectral radius (stein, dare) or `2‖A‖_F` (nme).
    pub r: Option<f64>,
    /// Spectrum `[a, b]` of `-A` (lyapunov).
    pub interval: Option<(f64, f64)>,
    /// Rank of the factors `B`, `C`.
    pub p: Option<usize>,
    pub critical: bool,
    /// Size of the strictly upper triangular perturbation (lyapunov).
    pub nonnormal: f64,
}

impl GeneratorSpec {
    pub fn new(kind: ProblemKind, n: usize, seed: u64) -> Self {
        Self {
            kind,
            n,
            seed,
            r: None,
            interval: None,
            p: None,
            critical: false,
            nonnormal: 0.0,
        }
    }

    pub fn with_r(mut self, r: f64) -> Self {
        self.r = Some(r);
        self
    }

    pub fn with_interval(mut self, a: f64, b: f64) -> Self {
        self.interval = Some((a, b));
        self
    }

    pub fn with_rank(mut self, p: usize) -> Self {
        self.p = Some(p);
        self
    }

    pub fn critical(mut self) -> Self {
        self.critical = true;
        self
    }

    pub fn radius(&self) -> f64 {
        self.r.unwrap_or(0.9)
    }

    pub fn rank(&self) -> usize {
        self.p.unwrap_or(self.n)
    }

    pub fn bounds(&self) -> (f64, f64) {
        self.interval.unwrap_or((1.0, 10.0))
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidSpec("n must be positive".into()));
        }
        let r = self.radius();
        if !(r > 0.0 && r <= 1.5) {
            return Err(Error::InvalidSpec(format!("r = {r} outside (0, 1.5]")));
        }
        let (a, b) = self.bounds();
        if !(a > 0.0 && a <= b && b.is_finite()) {
            return Err(Error::InvalidSpec(format!("interval [{a}, {b}] needs 0 < a <= b")));
        }
        let p = self.rank();
        if p < 1 || p > self.n {
            return Err(Error::InvalidSpec(format!("rank p = {p} outside [1, {}]", self.n)));
        }
        if self.critical && !matches!(self.kind, ProblemKind::Dare | ProblemKind::Nme) {
            return Err(Error::InvalidSpec(format!("no critical generator for {}", self.kind)));
        }
        if !(self.nonnormal >= 0.0 && self.nonnormal.is_finite()) {
            return Err(Error::InvalidSpec("nonnormal must be nonnegative".into()));
        }
        Ok(())
    }

    fn metadata(&self) -> Metadata {
        let mut params = BTreeMap::new();
        params.insert("p".to_string(), self.rank() as f64);
        match self.kind {
            ProblemKind::Stein | ProblemKind::Dare | ProblemKind::Nme => {
                params.insert("r".to_string(), self.radius());
            }
            ProblemKind::Lyapunov => {
                let (a, b) = self.bounds();
                params.insert("a".to_string(), a);
                params.insert("b".to_string(), b);
                params.insert("nonnormal".to_string(), self.nonnormal);
            }
            ProblemKind::Care => {}
        }
        if self.critical {
            params.insert("critical".to_string(), 1.0);
        }
        Metadata {
            generator: Some(GENERATOR_NAME.to_string()),
            seed: Some(self.seed),
            params,
        }
    }
}

fn scaled_to_radius(m: &Matrix, r: f64) -> Matrix {
    let rho = spectral_radius_estimate(m, RADIUS_DOUBLINGS);
    if rho == 0.0 {
        m.clone()
    } else {
        m.scale_real(r / rho)
    }
}

fn orthogonal_factor(m: &Matrix) -> Matrix {
    Matrix::from_inner(m.inner().clone().qr().q())
}

pub fn gen_problem(spec: &GeneratorSpec) -> Result<ProblemFile> {
    spec.validate()?;
    let n = spec.n;
    let p = spec.rank();
    let mut rng = SplitMix64::new(spec.seed);
    let mut file = ProblemFile::new(spec.kind, n);
    match spec.kind {
        ProblemKind::Stein => {
            let a = scaled_to_radius(&rng.matrix(n, n), spec.radius());
            let c = rng.matrix(p, n);
            file.set_matrix("A", &a);
            file.set_matrix("Q", &(c.transpose() * &c));
        }
        ProblemKind::Lyapunov => {
            let (lo, hi) = spec.bounds();
            let u = orthogonal_factor(&rng.matrix(n, n));
            let mut d = vec![lo; n];
            if n > 1 {
                d[n - 1] = hi;
                for di in d.iter_mut().take(n - 1).skip(1) {
                    *di = lo + (hi - lo) * rng.next_f64();
                }
            }
            let mut core = Matrix::from_real_diagonal(&d);
            if spec.nonnormal > 0.0 {
                let noise = rng.matrix(n, n);
                for i in 0..n {
                    for j in (i + 1)..n {
                        core.set(i, j, noise.get(i, j).scale(spec.nonnormal));
                    }
                }
            }
            let a = -(&u * core * u.transpose());
            let c = rng.matrix(p, n);
            file.set_matrix("A", &a);
            file.set_matrix("Q", &(c.transpose() * &c));
            file.set_matrix("C", &c);
        }
        ProblemKind::Dare if spec.critical => {
            let mut a0 = Matrix::identity(n);
            if n > 1 {
                let w = rng.matrix(1, n - 1);
                let r = rng.matrix(n - 1, n - 1);
                a0.set_block(0, 1, &w);
                a0.set_block(1, 1, &scaled_to_radius(&r, 0.6));
            }
            let b = rng.matrix(n, p);
            let mut c = rng.matrix(p, n);
            let u = orthogonal_factor(&rng.matrix(n, n));
            for i in 0..p {
                c.set(i, 0, C64::new(0.0, 0.0));
            }
            let ut = u.transpose();
            file.set_matrix("A", &(&u * a0 * &ut));
            file.set_matrix("G", &(&u * (&b * b.transpose()) * &ut));
            file.set_matrix("Q", &(&u * (c.transpose() * &c) * &ut));
        }
        ProblemKind::Dare => {
            let a = scaled_to_radius(&rng.matrix(n, n), spec.radius());
            let b = rng.matrix(n, p);
            let c = rng.matrix(p, n);
            file.set_matrix("A", &a);
            file.set_matrix("G", &(&b * b.transpose()));
            file.set_matrix("Q", &(c.transpose() * &c));
        }
        ProblemKind::Care => {
            let r = rng.matrix(n, n);
            let shift = spectral_radius_estimate(&r, RADIUS_DOUBLINGS) + 0.5;
            let b = rng.matrix(n, p);
            let c = rng.matrix(p, n);
            file.set_matrix("A", &r.shift_diagonal(C64::new(-shift, 0.0)));
            file.set_matrix("G", &(&b * b.transpose()));
            file.set_matrix("Q", &(c.transpose() * &c));
        }
        ProblemKind::Nme if spec.critical => {
            file.set_matrix("A", &Matrix::identity(n));
            file.set_matrix("Q", &Matrix::identity(n).scale_real(2.0));
        }
        ProblemKind::Nme => {
            let r = rng.matrix(n, n);
            let a = r.scale_real(spec.radius() / (2.0 * r.frobenius_norm()));
            let c = rng.matrix(p, n);
            let q = Matrix::identity(n) + (c.transpose() * &c).scale_real(1.0 / p as f64);
            file.set_matrix("A", &a);
            file.set_matrix("Q", &q);
        }
    }
    file.metadata = Some(spec.metadata());
    Ok(file)
}
