use std::fmt;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use super::generate::{gen_problem, GeneratorSpec};
use super::problem::{save_report, ProblemFile, ProblemKind};
use crate::care::{
    care_residual, care_sda_solve_auto, default_cayley_tau, newton_care_solve, sign_solve, CareProblem, Scaling,
    SignOptions,
};
use crate::dare::{
    closed_loop_radius, dare_fixed_point_solve, dare_residual, sda_solve, wiener_hopf_check,
    DoublingState,
};
use crate::error::{Error, Result};
use crate::linalg::{psd_check, HermitianMatrix, Matrix, C64};
use crate::lyap::{
    adi_solve, cayley_smith_solve, default_shift, lr_adi_solve, lyap_residual, LyapunovProblem, ShiftSequence,
};
use crate::nme::{cyclic_reduction_solve, nme_fixed_point_solve, nme_residual, spectral_factorize, uqme_residual};
use crate::oracle::{self, Region, SymplecticPair};
use crate::report::{tail_rate, SolveOptions, SolveReport};
use crate::stein::{smith_solve, squared_smith_solve, stein_residual};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_NOT_CONVERGED: i32 = 2;
pub const EXIT_USAGE: i32 = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Smith,
    SquaredSmith,
    Adi,
    LrAdi,
    CayleySmith,
    FixedPoint,
    Sda,
    Sign,
    Newton,
    Cr,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Self::Smith => "smith",
            Self::SquaredSmith => "squared-smith",
            Self::Adi => "adi",
            Self::LrAdi => "lr-adi",
            Self::CayleySmith => "cayley-smith",
            Self::FixedPoint => "fixed-point",
            Self::Sda => "sda",
            Self::Sign => "sign",
            Self::Newton => "newton",
            Self::Cr => "cr",
        }
    }

    pub fn for_kind(kind: ProblemKind) -> &'static [Method] {
        match kind {
            ProblemKind::Stein => &[Self::Smith, Self::SquaredSmith],
            ProblemKind::Lyapunov => &[Self::Adi, Self::LrAdi, Self::CayleySmith],
            ProblemKind::Dare => &[Self::FixedPoint, Self::Sda],
            ProblemKind::Care => &[Self::Sda, Self::Sign, Self::Newton],
            ProblemKind::Nme => &[Self::FixedPoint, Self::Cr],
        }
    }

    /// `None` when the name is not a method for `kind`.
    pub fn parse(kind: ProblemKind, name: &str) -> Option<Method> {
        Self::for_kind(kind).iter().copied().find(|m| m.name() == name)
    }

    pub fn is_doubling(self) -> bool {
        matches!(self, Self::SquaredSmith | Self::CayleySmith | Self::Sda | Self::Sign | Self::Newton | Self::Cr)
    }

    /// Basic and doubling method compared by `bench`.
    pub fn bench_pair(kind: ProblemKind) -> [Method; 2] {
        match kind {
            ProblemKind::Stein => [Self::Smith, Self::SquaredSmith],
            ProblemKind::Lyapunov => [Self::Adi, Self::CayleySmith],
            ProblemKind::Dare => [Self::FixedPoint, Self::Sda],
            ProblemKind::Care => [Self::Newton, Self::Sda],
            ProblemKind::Nme => [Self::FixedPoint, Self::Cr],
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// User overrides for a solve.
#[derive(Clone, Debug, Default)]
pub struct SolveConfig {
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub shifts: Option<Vec<C64>>,
    pub scaling: Option<Scaling>,
}

impl SolveConfig {
    pub fn options(&self, method: Method) -> SolveOptions {
        let mut opts = if method.is_doubling() {
            SolveOptions::doubling()
        } else {
            SolveOptions::basic()
        };
        if let Some(t) = self.tol {
            opts.tol = t;
        }
        if let Some(m) = self.max_iter {
            opts.max_iter = m;
        }
        opts
    }
}

fn shifts_for(file: &ProblemFile, p: &LyapunovProblem, cfg: &SolveConfig) -> Result<ShiftSequence> {
    if let Some(s) = &cfg.shifts {
        return ShiftSequence::new(s.clone());
    }
    match file.shift_sequence()? {
        Some(s) => Ok(s),
        None => ShiftSequence::single(default_shift(p)?),
    }
}

/// `X_0 = 0` when `A` is Hurwitz, else `cI` with `c` large enough that the
/// Hermitian part of `A - cG` is negative definite (needs `G ≻ 0`).
pub fn newton_start(p: &CareProblem) -> Result<HermitianMatrix> {
    let n = p.size();
    let hurwitz = |m: &Matrix| -> bool {
        let h = HermitianMatrix::from_hermitian_part(&-m);
        let scale = m.frobenius_norm().max(1.0);
        if psd_check(&h, 0.0) && nalgebra_min_eig(&h) > 1e-12 * scale {
            return true;
        }
        oracle::eigenvalues(m).is_ok_and(|e| e.iter().all(|l| l.re < 0.0))
    };
    if hurwitz(&p.a) {
        return Ok(HermitianMatrix::zeros(n));
    }
    let gmin = nalgebra_min_eig(&p.g);
    if gmin > 1e-12 * p.g.frobenius_norm().max(1.0) {
        let c = 2.0 * (p.a.frobenius_norm() + 1.0) / gmin;
        return Ok(HermitianMatrix::from_real_diagonal(&vec![c; n]));
    }
    Err(Error::InvalidSpec("newton needs a stabilizing start: A is not Hurwitz and G is singular".into()))
}

fn nalgebra_min_eig(h: &HermitianMatrix) -> f64 {
    h.as_matrix()
        .inner()
        .clone()
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

fn lr_adi_report(p: &LyapunovProblem, shifts: &ShiftSequence, opts: &SolveOptions) -> Result<SolveReport> {
    let start = Instant::now();
    let factor = lr_adi_solve(p, shifts, opts.max_iter, opts)?;
    let blocks = factor.blocks();
    let zero = HermitianMatrix::zeros(p.size());
    let mut history = vec![lyap_residual(&zero, p)];
    let mut elapsed = vec![0];
    let mut updates = Vec::new();
    for j in 1..=blocks {
        let v = factor.z.block(0, (j - 1) * factor.block_width, p.size(), factor.block_width);
        updates.push(v.frobenius_norm().powi(2));
        history.push(lyap_residual(&factor.prefix_product(j), p));
        elapsed.push(start.elapsed().as_nanos() as u64);
    }
    let x = factor.product();
    let final_residual = *history.last().expect("nonempty");
    Ok(SolveReport {
        x,
        converged: final_residual <= opts.tol,
        iterations: blocks,
        residual_history: history,
        elapsed_ns: elapsed,
        rate_estimate: tail_rate(&updates, 5),
        closed_loop_radius: None,
    })
}

/// Runs `method` on the problem stored in `file`.
pub fn solve_file(file: &ProblemFile, method: Method, cfg: &SolveConfig) -> Result<SolveReport> {
    let opts = cfg.options(method);
    match (file.kind, method) {
        (ProblemKind::Stein, Method::Smith) => smith_solve(&file.stein()?, &opts),
        (ProblemKind::Stein, Method::SquaredSmith) => squared_smith_solve(&file.stein()?, &opts),
        (ProblemKind::Lyapunov, m) => {
            let p = file.lyapunov()?;
            let shifts = shifts_for(file, &p, cfg)?;
            match m {
                Method::Adi => adi_solve(&p, &shifts, &opts),
                Method::LrAdi => lr_adi_report(&p, &shifts, &opts),
                Method::CayleySmith => cayley_smith_solve(&p, shifts.get(0), &opts),
                _ => unreachable!("checked by Method::parse"),
            }
        }
        (ProblemKind::Dare, Method::FixedPoint) => Ok(dare_fixed_point_solve(&file.dare()?, &opts)?.report),
        (ProblemKind::Dare, Method::Sda) => Ok(sda_solve(&file.dare()?, &opts)?.report),
        (ProblemKind::Care, Method::Sda) => Ok(care_sda_solve_auto(&file.care()?, &opts)?.report),
        (ProblemKind::Care, Method::Sign) => {
            let sign = SignOptions {
                scaling: cfg.scaling.unwrap_or(Scaling::Determinantal),
                tol: cfg.tol.unwrap_or(SignOptions::default().tol),
                max_iter: cfg.max_iter.unwrap_or(SignOptions::default().max_iter),
            };
            Ok(sign_solve(&file.care()?, &sign)?.report)
        }
        (ProblemKind::Care, Method::Newton) => {
            let p = file.care()?;
            Ok(newton_care_solve(&p, &newton_start(&p)?, &opts)?.report)
        }
        (ProblemKind::Nme, Method::FixedPoint) => nme_fixed_point_solve(&file.nme()?, &opts),
        (ProblemKind::Nme, Method::Cr) => cyclic_reduction_solve(&file.nme()?, &opts),
        (kind, m) => Err(Error::InvalidSpec(format!("method {m} does not apply to {kind}"))),
    }
}

pub fn write_trace(out: &mut impl Write, report: &SolveReport) -> std::io::Result<()> {
    writeln!(out, "iter,residual,elapsed_ns")?;
    for (k, (r, t)) in report.residual_history.iter().zip(&report.elapsed_ns).enumerate() {
        writeln!(out, "{k},{r:e},{t}")?;
    }
    Ok(())
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::NotConverged { .. } => EXIT_NOT_CONVERGED,
        _ => EXIT_FAILURE,
    }
}

/// `solve` subcommand. Messages go to `out`, diagnostics to `err`.
pub fn run_solve(
    file: &ProblemFile,
    method: &str,
    cfg: &SolveConfig,
    trace: Option<&Path>,
    output: Option<&Path>,
    out: &mut impl Write,
    err: &mut impl Write,
) -> i32 {
    let Some(method) = Method::parse(file.kind, method) else {
        let names: Vec<&str> = Method::for_kind(file.kind).iter().map(|m| m.name()).collect();
        let _ = writeln!(err, "unknown method \"{method}\" for {}; expected one of {}", file.kind, names.join(", "));
        return EXIT_USAGE;
    };
    let report = match solve_file(file, method, cfg) {
        Ok(r) => r,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return exit_code(&e);
        }
    };
    if let Some(path) = trace {
        let written = std::fs::File::create(path).and_then(|f| {
            let mut w = std::io::BufWriter::new(f);
            write_trace(&mut w, &report)?;
            w.flush()
        });
        if let Err(e) = written {
            let _ = writeln!(err, "error: writing trace {}: {e}", path.display());
            return EXIT_FAILURE;
        }
    }
    if let Some(path) = output {
        if let Err(e) = save_report(path, &report) {
            let _ = writeln!(err, "error: {e}");
            return EXIT_FAILURE;
        }
    }
    let _ = writeln!(out, "method: {method}");
    let _ = writeln!(out, "converged: {}", report.converged);
    let _ = writeln!(out, "iterations: {}", report.iterations);
    let _ = writeln!(out, "final_residual: {:e}", report.final_residual());
    if report.converged {
        EXIT_OK
    } else {
        let _ = writeln!(err, "not converged after {} iterations", report.iterations);
        EXIT_NOT_CONVERGED
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    Skip,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Skip => "SKIP",
        })
    }
}

#[derive(Clone, Debug)]
pub struct Check {
    pub name: String,
    pub value: Option<f64>,
    pub threshold: f64,
    pub status: Status,
    pub note: String,
}

impl Check {
    fn measured(name: &str, value: f64, threshold: f64) -> Self {
        Self {
            name: name.to_string(),
            value: Some(value),
            threshold,
            status: if value <= threshold { Status::Pass } else { Status::Fail },
            note: String::new(),
        }
    }

    fn skipped(name: &str, threshold: f64, note: String) -> Self {
        Self {
            name: name.to_string(),
            value: None,
            threshold,
            status: Status::Skip,
            note,
        }
    }

    fn from_result(name: &str, value: Result<f64>, threshold: f64) -> Self {
        match value {
            Ok(v) => Self::measured(name, v, threshold),
            Err(e) => Self {
                name: name.to_string(),
                value: None,
                threshold,
                status: if matches!(e, Error::TooLarge { .. } | Error::OverflowGuard { .. }) {
                    Status::Skip
                } else {
                    Status::Fail
                },
                note: e.to_string(),
            },
        }
    }
}

fn rel_diff(x: &HermitianMatrix, y: &HermitianMatrix) -> f64 {
    (x.as_matrix() - y.as_matrix()).frobenius_norm() / y.frobenius_norm().max(1e-300)
}

fn agreement(name: &str, x: Result<HermitianMatrix>, reference: &Result<HermitianMatrix>, threshold: f64) -> Check {
    let value = match (x, reference) {
        (Ok(x), Ok(r)) => Ok(rel_diff(&x, r)),
        (Err(e), _) => Err(e),
        (_, Err(e)) => Err(e.clone()),
    };
    Check::from_result(name, value, threshold)
}

fn converged(r: SolveReport) -> Result<HermitianMatrix> {
    Ok(r.into_converged()?.x)
}

fn stein_checks(file: &ProblemFile) -> Result<Vec<Check>> {
    let p = file.stein()?;
    let oracle = oracle::kron_stein_solve(&p);
    let ss = converged(squared_smith_solve(&p, &SolveOptions::doubling())?);
    let mut out = vec![Check::from_result(
        "squared-smith residual",
        ss.clone().map(|x| stein_residual(&x, &p)),
        1e-10,
    )];
    out.push(agreement("squared-smith vs kronecker", ss.clone(), &oracle, 1e-8));
    out.push(agreement("smith vs squared-smith", smith_solve(&p, &SolveOptions::basic()).and_then(converged), &ss, 1e-8));
    Ok(out)
}

fn lyapunov_checks(file: &ProblemFile) -> Result<Vec<Check>> {
    let p = file.lyapunov()?;
    let shifts = shifts_for(file, &p, &SolveConfig::default())?;
    let oracle = oracle::kron_lyap_solve(&p);
    let cs = cayley_smith_solve(&p, shifts.get(0), &SolveOptions::doubling()).and_then(converged);
    let adi = adi_solve(&p, &shifts, &SolveOptions::basic()).and_then(converged);
    Ok(vec![
        Check::from_result("cayley-smith residual", cs.clone().map(|x| lyap_residual(&x, &p)), 1e-10),
        agreement("cayley-smith vs kronecker", cs.clone(), &oracle, 1e-8),
        agreement("adi vs cayley-smith", adi, &cs, 1e-8),
    ])
}

/// Checks on the symplectic pencil that do not need semidefinite data.
/// Eigenvalues on the unit circle make the inside count fall short of `n`;
/// that mismatch is reported as expected when every missing eigenvalue sits
/// on the circle.
fn symplectic_raw_checks(a: &Matrix, g: &Matrix, q: &Matrix) -> Vec<Check> {
    let n = a.rows();
    let cap = oracle::eigen_cap();
    if n > cap {
        return vec![Check::from_result("symplectic defect", Err(Error::TooLarge { n, cap }), 1e-8)];
    }
    let pair = match SymplecticPair::assemble(a, g, q) {
        Ok(pair) => pair,
        Err(e) => return vec![Check::from_result("symplectic defect", Err(e), 1e-8)],
    };
    let norm = pair.s.frobenius_norm();
    let mut out = if f64::EPSILON * norm * norm > 1e-9 {
        vec![Check::skipped(
            "symplectic defect",
            1e-8,
            format!("explicit S has norm {norm:.2e}; roundoff exceeds the threshold"),
        )]
    } else {
        vec![Check::measured("symplectic defect", pair.defect(), 1e-8)]
    };
    let eigs = match oracle::pencil_eigenvalues(a, g, q) {
        Ok(e) => e,
        Err(e) => {
            out.push(Check::from_result("eigenvalue pairing", Err(e), 1e-8));
            return out;
        }
    };
    out.push(Check::measured("eigenvalue pairing", oracle::symplectic_pairing_defect(&eigs), 1e-6));
    let inside = eigs.iter().filter(|&&z| Region::InsideUnitCircle.strictly_contains(z)).count();
    let boundary: Vec<f64> = eigs
        .iter()
        .filter(|&&z| !Region::InsideUnitCircle.strictly_contains(z) && z.norm() <= 1.0 + oracle::REGION_MARGIN)
        .map(|z| (z.norm() - 1.0).abs())
        .collect();
    if inside == n {
        out.push(Check::measured("region count", 0.0, 0.0));
    } else {
        let worst = boundary.iter().copied().fold(0.0, f64::max);
        let mut c = Check::measured("unit-circle eigenvalues", worst, oracle::REGION_MARGIN);
        if inside + boundary.len() / 2 != n || boundary.is_empty() {
            c.status = Status::Fail;
        }
        c.note = format!("expected region mismatch: {inside} of {n} strictly inside, {} on the circle", boundary.len());
        out.push(c);
    }
    out
}

fn dare_checks(file: &ProblemFile) -> Result<Vec<Check>> {
    let (a, g, q) = (file.matrix("A")?, file.matrix("G")?, file.matrix("Q")?);
    let p = match file.dare() {
        Ok(p) => p,
        Err(Error::NotPositiveSemidefinite { .. }) => return Ok(symplectic_raw_checks(&a, &g, &q)),
        Err(e) => return Err(e),
    };
    let mut out = symplectic_raw_checks(&a, &g, &q);
    let oracle = oracle::dare_oracle(&p);
    let sda = sda_solve(&p, &SolveOptions::doubling());
    let xs = sda.as_ref().map_err(Clone::clone).and_then(|s| converged(s.report.clone()));
    out.push(Check::from_result("sda residual", xs.clone().and_then(|x| dare_residual(&x, &p)), 1e-10));
    out.push(agreement("sda vs invariant subspace", xs.clone(), &oracle, 1e-8));
    out.push(agreement(
        "fixed-point vs sda",
        dare_fixed_point_solve(&p, &SolveOptions::basic()).and_then(|s| converged(s.report)),
        &xs,
        1e-8,
    ));
    out.push(Check::from_result(
        "closed-loop radius",
        xs.clone().and_then(|x| closed_loop_radius(&x, &p)),
        1.0 - f64::EPSILON,
    ));
    out.push(Check::from_result("wiener-hopf", sda.and_then(|s| wiener_hopf_check(&s, &p)), 1e-8));
    let mut state = DoublingState::new(&p);
    let mut worst = Ok(0.0);
    for _ in 0..3 {
        worst = state.step().and_then(|_| oracle::sda_factorization_check(&state, &p)).map(|d| d.max(*worst.as_ref().unwrap_or(&0.0)));
        if worst.is_err() {
            break;
        }
    }
    out.push(Check::from_result("sda factorization (k <= 3)", worst, 1e-7));
    Ok(out)
}

fn care_checks(file: &ProblemFile) -> Result<Vec<Check>> {
    let p = file.care()?;
    let h = p.hamiltonian();
    let mut out = vec![Check::from_result(
        "hamiltonian defect",
        oracle::hamiltonian_check(h.as_matrix()).map(|h| crate::care::hamiltonian_defect(h.as_matrix())),
        1e-8,
    )];
    out.push(Check::from_result(
        "eigenvalue pairing",
        oracle::eigenvalues(h.as_matrix()).map(|e| oracle::hamiltonian_pairing_defect(&e)),
        1e-6,
    ));
    let oracle = oracle::care_oracle(&p);
    let sda = care_sda_solve_auto(&p, &SolveOptions::doubling()).and_then(|s| converged(s.report));
    out.push(Check::from_result("sda residual", sda.clone().map(|x| care_residual(&x, &p)), 1e-10));
    out.push(agreement("sda vs invariant subspace", sda.clone(), &oracle, 1e-7));
    for (label, opts) in [("sign (determinantal)", SignOptions::default()), ("sign (unscaled)", SignOptions::unscaled())] {
        let x = sign_solve(&p, &opts).map(|s| s.x_plus);
        out.push(agreement(&format!("{label} vs sda"), x, &sda, 1e-7));
    }
    let newton = newton_start(&p)
        .and_then(|x0| newton_care_solve(&p, &x0, &SolveOptions::doubling()))
        .and_then(|s| converged(s.report));
    out.push(agreement("newton vs sda", newton, &sda, 1e-7));
    out.push(Check::from_result("sign relation (k = 2)", oracle::sign_relation_check(&p, default_cayley_tau(&p), 2), 1e-8));
    Ok(out)
}

fn nme_checks(file: &ProblemFile) -> Result<Vec<Check>> {
    let p = file.nme()?;
    let opts = SolveOptions::doubling();
    let sf = spectral_factorize(&p, &opts);
    let cr = sf.as_ref().map_err(Clone::clone).and_then(|s| converged(s.report.clone()));
    let mut out = vec![Check::from_result("cr residual", cr.clone().and_then(|x| nme_residual(&x, &p)), 1e-10)];
    out.push(agreement(
        "fixed-point vs cr",
        nme_fixed_point_solve(&p, &SolveOptions::basic()).and_then(converged),
        &cr,
        1e-8,
    ));
    out.push(Check::from_result("uqme residual", sf.as_ref().map(|s| uqme_residual(&s.y, &p)).map_err(Clone::clone), 1e-10));
    out.push(Check::from_result("spectral radius of Y", sf.map(|s| s.y_radius()), 1.0));
    let n = p.size();
    let tri = if n * 4 > 2 * oracle::kron_cap() {
        Err(Error::TooLarge { n: 4 * n, cap: 2 * oracle::kron_cap() })
    } else {
        oracle::tridiag_schur_oracle(&p, 4).map(|o| {
            let mut s = crate::nme::CrState::new(&p);
            s.step().expect("one cyclic reduction step");
            let d = |x: &Matrix, y: &Matrix| (x - y).frobenius_norm() / y.frobenius_norm().max(1.0);
            d(&s.a, &o.a).max(d(s.q.as_matrix(), o.q.as_matrix())).max(d(s.u.as_matrix(), o.u.as_matrix()))
        })
    };
    out.push(Check::from_result("tridiagonal schur (one level)", tri, 1e-10));
    Ok(out)
}

/// All cross-checks applicable to the file.
pub fn verify_checks(file: &ProblemFile) -> Result<Vec<Check>> {
    match file.kind {
        ProblemKind::Stein => stein_checks(file),
        ProblemKind::Lyapunov => lyapunov_checks(file),
        ProblemKind::Dare => dare_checks(file),
        ProblemKind::Care => care_checks(file),
        ProblemKind::Nme => nme_checks(file),
    }
}

pub fn run_verify(file: &ProblemFile, out: &mut impl Write, err: &mut impl Write) -> i32 {
    let checks = match verify_checks(file) {
        Ok(c) => c,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_FAILURE;
        }
    };
    let _ = writeln!(out, "{:<32} {:>12} {:>12}  status", "check", "value", "threshold");
    for c in &checks {
        let value = c.value.map_or_else(|| "-".to_string(), |v| format!("{v:.3e}"));
        let _ = write!(out, "{:<32} {:>12} {:>12.3e}  {}", c.name, value, c.threshold, c.status);
        if !c.note.is_empty() {
            let _ = write!(out, "  ({})", c.note);
        }
        let _ = writeln!(out);
    }
    if checks.iter().any(|c| c.status == Status::Fail) {
        EXIT_FAILURE
    } else {
        EXIT_OK
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchRow {
    pub kind: ProblemKind,
    pub method: Method,
    pub n: usize,
    pub iterations: usize,
    pub final_residual: f64,
    pub wall_ns: u128,
    pub converged: bool,
}

/// One generated problem per size, solved by the basic and the doubling
/// method of the kind. Failed cells have `iterations = 0` and a NaN residual.
pub fn bench_rows(kind: ProblemKind, sizes: &[usize], seed: u64, cfg: &SolveConfig) -> Result<Vec<BenchRow>> {
    if sizes.is_empty() {
        return Err(Error::InvalidSpec("empty size list".into()));
    }
    let mut rows = Vec::new();
    for &n in sizes {
        let file = gen_problem(&GeneratorSpec::new(kind, n, seed))?;
        for method in Method::bench_pair(kind) {
            let start = Instant::now();
            let result = solve_file(&file, method, cfg);
            let wall_ns = start.elapsed().as_nanos();
            rows.push(match result {
                Ok(r) => BenchRow {
                    kind,
                    method,
                    n,
                    iterations: r.iterations,
                    final_residual: r.final_residual(),
                    wall_ns,
                    converged: r.converged,
                },
                Err(_) => BenchRow {
                    kind,
                    method,
                    n,
                    iterations: 0,
                    final_residual: f64::NAN,
                    wall_ns,
                    converged: false,
                },
            });
        }
    }
    Ok(rows)
}

pub fn write_bench(out: &mut impl Write, rows: &[BenchRow]) -> std::io::Result<()> {
    writeln!(out, "kind,method,n,iterations,final_residual,wall_ns")?;
    for r in rows {
        writeln!(out, "{},{},{},{},{:e},{}", r.kind, r.method, r.n, r.iterations, r.final_residual, r.wall_ns)?;
    }
    Ok(())
}

pub fn run_bench(
    kind: ProblemKind,
    sizes: &[usize],
    seed: u64,
    cfg: &SolveConfig,
    out: &mut impl Write,
    err: &mut impl Write,
) -> i32 {
    if sizes.is_empty() {
        let _ = writeln!(err, "error: --sizes needs at least one size");
        return EXIT_USAGE;
    }
    match bench_rows(kind, sizes, seed, cfg) {
        Ok(rows) => match write_bench(out, &rows) {
            Ok(()) => EXIT_OK,
            Err(e) => {
                let _ = writeln!(err, "error: {e}");
                EXIT_FAILURE
            }
        },
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_FAILURE
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn method_names_round_trip() {
        for kind in ProblemKind::ALL {
            for &m in Method::for_kind(kind) {
                assert_eq!(Method::parse(kind, m.name()), Some(m));
            }
        }
        assert_eq!(Method::parse(ProblemKind::Stein, "qr"), None);
        assert_eq!(Method::parse(ProblemKind::Stein, "sda"), None);
    }

    #[test]
    fn every_method_solves_generated_problem() {
        for kind in ProblemKind::ALL {
            let file = gen_problem(&GeneratorSpec::new(kind, 4, 5)).unwrap();
            for &m in Method::for_kind(kind) {
                let r = solve_file(&file, m, &SolveConfig::default()).unwrap();
                assert!(r.converged, "{kind} {m}: {:e}", r.final_residual());
                assert_eq!(r.residual_history.len(), r.elapsed_ns.len());
            }
        }
    }

    #[test]
    fn trace_format() {
        let file = gen_problem(&GeneratorSpec::new(ProblemKind::Stein, 3, 1)).unwrap();
        let r = solve_file(&file, Method::SquaredSmith, &SolveConfig::default()).unwrap();
        let mut buf = Vec::new();
        write_trace(&mut buf, &r).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "iter,residual,elapsed_ns");
        assert_eq!(lines.len(), r.iterations + 2);
        assert!(!text.contains('\r'));
    }

    #[test]
    fn verify_generated_problems() {
        for kind in ProblemKind::ALL {
            let file = gen_problem(&GeneratorSpec::new(kind, 3, 9)).unwrap();
            for c in verify_checks(&file).unwrap() {
                assert_eq!(c.status, Status::Pass, "{kind}: {c:?}");
            }
        }
    }
}
