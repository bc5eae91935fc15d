use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use riccati_core::harness::{load_problem, save_problem, gen_problem, GeneratorSpec, ProblemKind};
use riccati_core::linalg::psd_check;
use riccati_core::dare::sda_solve;
use riccati_core::report::SolveOptions;
use tempfile::TempDir;

fn riccati(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_riccati")).args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn path(dir: &TempDir, name: &str) -> PathBuf {
    dir.path().join(name)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn gen(dir: &TempDir, name: &str, extra: &[&str]) -> PathBuf {
    let p = path(dir, name);
    let mut args = vec!["gen"];
    args.extend_from_slice(extra);
    args.extend_from_slice(&["--output", s(&p)]);
    let out = riccati(&args);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    p
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = path(dir, name);
    std::fs::write(&p, text).unwrap();
    p
}

fn trace_residuals(p: &Path) -> Vec<f64> {
    let text = std::fs::read_to_string(p).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("iter,residual,elapsed_ns"));
    lines.map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect()
}

#[test]
fn gen_is_byte_deterministic() {
    let dir = TempDir::new().unwrap();
    let args = ["--kind", "stein", "--n", "8", "--seed", "1", "--r", "0.9"];
    let a = std::fs::read(gen(&dir, "a.json", &args)).unwrap();
    let b = std::fs::read(gen(&dir, "b.json", &args)).unwrap();
    assert_eq!(a, b);
    let c = std::fs::read(gen(&dir, "c.json", &["--kind", "stein", "--n", "8", "--seed", "2"])).unwrap();
    assert_ne!(a, c);
}

#[test]
fn gen_critical_nme_scalar() {
    let dir = TempDir::new().unwrap();
    let f = load_problem(&gen(&dir, "n.json", &["--kind", "nme", "--n", "1", "--critical"])).unwrap();
    assert_eq!(f.a, Some(vec![vec![[1.0, 0.0]]]));
    assert_eq!(f.q, Some(vec![vec![[2.0, 0.0]]]));
}

#[test]
fn gen_dare_self_check() {
    let f = gen_problem(&GeneratorSpec::new(ProblemKind::Dare, 4, 7)).unwrap();
    let p = f.dare().unwrap();
    assert!(psd_check(&p.g, 0.0) && psd_check(&p.q, 0.0));
    assert!(sda_solve(&p, &SolveOptions::doubling()).unwrap().report.converged);
}

#[test]
fn gen_rejects_bad_spec() {
    assert_eq!(code(&riccati(&["gen", "--kind", "stein", "--n", "3", "--r", "2"])), 1);
    assert_eq!(code(&riccati(&["gen", "--kind", "care", "--n", "3", "--critical"])), 1);
    assert_eq!(code(&riccati(&["gen", "--kind", "qr", "--n", "3"])), 64);
}

#[test]
fn problem_file_round_trip() {
    let dir = TempDir::new().unwrap();
    let f = gen_problem(&GeneratorSpec::new(ProblemKind::Dare, 5, 3)).unwrap();
    let p = path(&dir, "d.json");
    save_problem(&p, &f).unwrap();
    let back = load_problem(&p).unwrap();
    assert_eq!(back, f);
    save_problem(&p, &back).unwrap();
    assert_eq!(load_problem(&p).unwrap(), back);
}

#[test]
fn solve_exit_codes() {
    let dir = TempDir::new().unwrap();
    let f = gen(&dir, "s.json", &["--kind", "stein", "--n", "8", "--seed", "1", "--r", "0.9"]);
    let trace = path(&dir, "t.csv");
    let out = riccati(&["solve", "--input", s(&f), "--method", "squared-smith", "--trace", s(&trace)]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("iterations:"));
    assert!(stdout(&out).contains("final_residual:"));
    let rows = trace_residuals(&trace);
    assert!(rows.len() <= 15);

    let crit = gen(&dir, "c.json", &["--kind", "stein", "--n", "8", "--seed", "1", "--r", "1.0"]);
    assert_eq!(code(&riccati(&["solve", "--input", s(&crit), "--method", "smith", "--max-iter", "50"])), 2);

    assert_eq!(code(&riccati(&["solve", "--input", s(&f), "--method", "qr"])), 64);
    assert_eq!(code(&riccati(&["solve", "--input", s(&f), "--method", "sda"])), 64);
    assert_eq!(code(&riccati(&["solve", "--input", s(&f)])), 64);
    assert_eq!(code(&riccati(&["solve", "--input", s(&f), "--method", "smith", "--tol", "x"])), 64);
    assert_eq!(code(&riccati(&["solve", "--input", s(&path(&dir, "missing.json")), "--method", "smith"])), 1);
    let bad = write(&dir, "bad.json", "{\"kind\": \"stein\", \"n\": 2, \"A\": [[");
    assert_eq!(code(&riccati(&["solve", "--input", s(&bad), "--method", "smith"])), 1);
}

#[test]
fn solve_writes_report() {
    let dir = TempDir::new().unwrap();
    let f = gen(&dir, "d.json", &["--kind", "dare", "--n", "3", "--seed", "2"]);
    let rep = path(&dir, "r.json");
    assert_eq!(code(&riccati(&["solve", "--input", s(&f), "--method", "sda", "--output", s(&rep)])), 0);
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&rep).unwrap()).unwrap();
    assert_eq!(v["converged"], serde_json::Value::Bool(true));
    assert_eq!(v["X"].as_array().unwrap().len(), 3);
}

#[test]
fn every_method_through_cli() {
    let dir = TempDir::new().unwrap();
    let cases = [
        ("stein", &["smith", "squared-smith"][..]),
        ("lyapunov", &["adi", "lr-adi", "cayley-smith"][..]),
        ("dare", &["fixed-point", "sda"][..]),
        ("care", &["sda", "sign", "newton"][..]),
        ("nme", &["fixed-point", "cr"][..]),
    ];
    for (kind, methods) in cases {
        let f = gen(&dir, &format!("{kind}.json"), &["--kind", kind, "--n", "5", "--seed", "4"]);
        for m in methods {
            let out = riccati(&["solve", "--input", s(&f), "--method", m]);
            assert_eq!(code(&out), 0, "{kind} {m}: {}", String::from_utf8_lossy(&out.stderr));
        }
    }
}

#[test]
fn lyapunov_shift_flag() {
    let dir = TempDir::new().unwrap();
    let f = gen(&dir, "l.json", &["--kind", "lyapunov", "--n", "4", "--seed", "1", "--a", "1", "--b", "100"]);
    assert_eq!(code(&riccati(&["solve", "--input", s(&f), "--method", "adi", "--shifts", "10,2+0.5i,40"])), 0);
    assert_eq!(code(&riccati(&["solve", "--input", s(&f), "--method", "adi", "--shifts=-1"])), 1);
    assert_eq!(code(&riccati(&["solve", "--input", s(&f), "--method", "adi", "--shifts", "abc"])), 64);
}

#[test]
fn doubling_traces_decrease() {
    let dir = TempDir::new().unwrap();
    let cases = [
        ("stein", "squared-smith"),
        ("lyapunov", "cayley-smith"),
        ("dare", "sda"),
        ("care", "sda"),
        ("nme", "cr"),
    ];
    for seed in ["1", "2", "3"] {
        for (kind, method) in cases {
            let f = gen(&dir, &format!("{kind}{seed}.json"), &["--kind", kind, "--n", "6", "--seed", seed]);
            let trace = path(&dir, &format!("{kind}{seed}.csv"));
            assert_eq!(code(&riccati(&["solve", "--input", s(&f), "--method", method, "--trace", s(&trace)])), 0);
            let r = trace_residuals(&trace);
            let bumps = r[1..].windows(2).filter(|w| w[1] >= w[0]).count();
            assert!(bumps <= 1, "{kind} {method} seed {seed}: {r:?}");
        }
    }
}

#[test]
fn verify_golden_ratio_file() {
    let dir = TempDir::new().unwrap();
    let f = write(&dir, "phi.json", r#"{"kind":"dare","n":1,"A":[[[1,0]]],"G":[[[1,0]]],"Q":[[[1,0]]]}"#);
    let out = riccati(&["verify", "--input", s(&f)]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    assert!(!text.contains("FAIL") && !text.contains("SKIP"), "{text}");
}

#[test]
fn verify_unit_circle_example() {
    let dir = TempDir::new().unwrap();
    let f = write(
        &dir,
        "uc.json",
        r#"{"kind":"dare","n":2,
            "A":[[[1,0],[3,0]],[[0,0],[1,0]]],
            "G":[[[1,0],[1,0]],[[1,0],[1,0]]],
            "Q":[[[1,0],[0,0]],[[0,0],[-10,0]]]}"#,
    );
    let out = riccati(&["verify", "--input", s(&f)]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
    let text = stdout(&out);
    let pairing = text.lines().find(|l| l.starts_with("eigenvalue pairing")).unwrap();
    assert!(pairing.ends_with("PASS"));
    let mismatch = text.lines().find(|l| l.contains("expected region mismatch")).unwrap();
    assert!(mismatch.contains("PASS"));
}

#[test]
fn verify_skips_over_cap() {
    let dir = TempDir::new().unwrap();
    let f = gen(&dir, "big.json", &["--kind", "stein", "--n", "100", "--seed", "1"]);
    let out = riccati(&["verify", "--input", s(&f)]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("SKIP"));
    assert_eq!(code(&riccati(&["verify", "--input", s(&f), "--kind", "dare"])), 64);
}

#[test]
fn verify_generated_files() {
    let dir = TempDir::new().unwrap();
    for kind in ["stein", "lyapunov", "dare", "care", "nme"] {
        let f = gen(&dir, &format!("{kind}.json"), &["--kind", kind, "--n", "4", "--seed", "8"]);
        let out = riccati(&["verify", "--input", s(&f), "--kind", kind]);
        assert_eq!(code(&out), 0, "{}", stdout(&out));
    }
}

fn bench(args: &[&str]) -> (i32, Vec<Vec<String>>) {
    let mut full = vec!["bench"];
    full.extend_from_slice(args);
    let out = riccati(&full);
    let text = stdout(&out);
    let mut lines = text.lines();
    let rows = match lines.next() {
        Some(h) => {
            assert_eq!(h, "kind,method,n,iterations,final_residual,wall_ns");
            lines.map(|l| l.split(',').map(str::to_string).collect()).collect()
        }
        None => Vec::new(),
    };
    (code(&out), rows)
}

#[test]
fn bench_stein_log2_relation() {
    let (c, rows) = bench(&["--kind", "stein", "--sizes", "16,64", "--seed", "3"]);
    assert_eq!(c, 0);
    assert_eq!(rows.len(), 4);
    for pair in rows.chunks(2) {
        assert_eq!((pair[0][1].as_str(), pair[1][1].as_str()), ("smith", "squared-smith"));
        let basic: f64 = pair[0][3].parse().unwrap();
        let doubling: f64 = pair[1][3].parse().unwrap();
        assert!(doubling <= basic.log2().ceil() + 1.0, "{pair:?}");
    }
}

#[test]
fn bench_dare_within_budget() {
    let (c, rows) = bench(&["--kind", "dare", "--sizes", "16", "--seed", "1"]);
    assert_eq!(c, 0);
    let sda = rows.iter().find(|r| r[1] == "sda").unwrap();
    let it: usize = sda[3].parse().unwrap();
    assert!((1..=60).contains(&it));
}

#[test]
fn bench_is_deterministic_apart_from_timing() {
    let strip = |rows: Vec<Vec<String>>| -> Vec<Vec<String>> { rows.into_iter().map(|r| r[..5].to_vec()).collect() };
    let a = strip(bench(&["--kind", "nme", "--sizes", "4,8", "--seed", "5"]).1);
    let b = strip(bench(&["--kind", "nme", "--sizes", "4,8", "--seed", "5"]).1);
    assert_eq!(a, b);
}

#[test]
fn bench_usage_errors() {
    assert_eq!(bench(&["--kind", "stein", "--sizes", "", "--seed", "3"]).0, 64);
    assert_eq!(bench(&["--kind", "stein", "--sizes", "4,x"]).0, 64);
    assert_eq!(bench(&["--kind", "stein"]).0, 64);
}

#[test]
fn help_exits_zero() {
    assert_eq!(code(&riccati(&["--help"])), 0);
    assert_eq!(code(&riccati(&[])), 64);
    assert_eq!(code(&riccati(&["frobnicate"])), 64);
}
