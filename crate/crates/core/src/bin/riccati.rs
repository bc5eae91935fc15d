use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{error::ErrorKind, Args, Parser, Subcommand, ValueEnum};
use riccati_core::care::Scaling;
use riccati_core::harness::commands::{run_bench, run_solve, run_verify, SolveConfig, EXIT_FAILURE, EXIT_USAGE};
use riccati_core::harness::{gen_problem, load_problem, parse_shifts, GeneratorSpec, ProblemKind};

#[derive(Parser)]
#[command(name = "riccati", version, about = "Solve, verify and benchmark dense matrix equations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a seeded random problem file.
    Gen(GenArgs),
    /// Solve a problem file with one method.
    Solve(SolveArgs),
    /// Cross-check a problem file against the dense oracles.
    Verify(VerifyArgs),
    /// Compare basic and doubling iteration counts on generated problems.
    Bench(BenchArgs),
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, value_parser = parse_kind)]
    kind: ProblemKind,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Target spectral radius (stein, dare) or 2‖A‖_F (nme).
    #[arg(long)]
    r: Option<f64>,
    /// Lower end of the spectrum of -A (lyapunov).
    #[arg(long)]
    a: Option<f64>,
    /// Upper end of the spectrum of -A (lyapunov).
    #[arg(long)]
    b: Option<f64>,
    /// Rank of the factors B and C.
    #[arg(long)]
    p: Option<usize>,
    /// Boundary instance (dare, nme).
    #[arg(long)]
    critical: bool,
    /// Non-normal perturbation size (lyapunov).
    #[arg(long, default_value_t = 0.0)]
    nonnormal: f64,
    /// Output file; stdout when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    method: String,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    /// Comma separated shifts, e.g. `1.5,2+0.5i`.
    #[arg(long)]
    shifts: Option<String>,
    /// Sign iteration scaling.
    #[arg(long, value_enum)]
    scaling: Option<ScalingArg>,
    /// CSV trace `iter,residual,elapsed_ns`.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// JSON report with the solution.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScalingArg {
    Determinantal,
    None,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    input: PathBuf,
    /// Expected kind of the file.
    #[arg(long, value_parser = parse_kind)]
    kind: Option<ProblemKind>,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, value_parser = parse_kind)]
    kind: ProblemKind,
    /// Comma separated sizes.
    #[arg(long)]
    sizes: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    /// CSV output file; stdout when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
}

fn parse_kind(s: &str) -> Result<ProblemKind, String> {
    s.parse().map_err(|e: riccati_core::error::Error| e.to_string())
}

fn usage(msg: &str) -> i32 {
    eprintln!("error: {msg}");
    EXIT_USAGE
}

fn gen(args: GenArgs) -> i32 {
    let mut spec = GeneratorSpec::new(args.kind, args.n, args.seed);
    spec.r = args.r;
    spec.p = args.p;
    spec.critical = args.critical;
    spec.nonnormal = args.nonnormal;
    spec.interval = match (args.a, args.b) {
        (None, None) => None,
        (Some(a), Some(b)) => Some((a, b)),
        _ => return usage("--a and --b go together"),
    };
    let file = match gen_problem(&spec) {
        Ok(f) => f,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_FAILURE;
        }
    };
    let text = file.to_json();
    let written = match &args.output {
        Some(path) => std::fs::write(path, text),
        None => io::stdout().write_all(text.as_bytes()),
    };
    match written {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_FAILURE
        }
    }
}

fn solve(args: SolveArgs) -> i32 {
    let shifts = match args.shifts.as_deref().map(parse_shifts).transpose() {
        Ok(s) => s,
        Err(e) => return usage(&e.to_string()),
    };
    let file = match load_problem(&args.input) {
        Ok(f) => f,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_FAILURE;
        }
    };
    let cfg = SolveConfig {
        tol: args.tol,
        max_iter: args.max_iter,
        shifts,
        scaling: args.scaling.map(|s| match s {
            ScalingArg::Determinantal => Scaling::Determinantal,
            ScalingArg::None => Scaling::None,
        }),
    };
    run_solve(
        &file,
        &args.method,
        &cfg,
        args.trace.as_deref(),
        args.output.as_deref(),
        &mut io::stdout(),
        &mut io::stderr(),
    )
}

fn verify(args: VerifyArgs) -> i32 {
    let file = match load_problem(&args.input) {
        Ok(f) => f,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_FAILURE;
        }
    };
    if let Some(kind) = args.kind {
        if kind != file.kind {
            return usage(&format!("--kind {kind} but the file holds a {} problem", file.kind));
        }
    }
    run_verify(&file, &mut io::stdout(), &mut io::stderr())
}

fn bench(args: BenchArgs) -> i32 {
    let sizes: Result<Vec<usize>, _> = args
        .sizes
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::parse)
        .collect();
    let sizes = match sizes {
        Ok(s) if !s.is_empty() => s,
        Ok(_) => return usage("--sizes needs at least one size"),
        Err(e) => return usage(&format!("bad size list: {e}")),
    };
    let cfg = SolveConfig {
        tol: args.tol,
        max_iter: args.max_iter,
        ..SolveConfig::default()
    };
    match &args.output {
        Some(path) => match std::fs::File::create(path) {
            Ok(f) => run_bench(args.kind, &sizes, args.seed, &cfg, &mut io::BufWriter::new(f), &mut io::stderr()),
            Err(e) => {
                eprintln!("error: {e}");
                EXIT_FAILURE
            }
        },
        None => run_bench(args.kind, &sizes, args.seed, &cfg, &mut io::stdout(), &mut io::stderr()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => EXIT_USAGE,
            };
            return ExitCode::from(code as u8);
        }
    };
    let code = match cli.command {
        Command::Gen(a) => gen(a),
        Command::Solve(a) => solve(a),
        Command::Verify(a) => verify(a),
        Command::Bench(a) => bench(a),
    };
    ExitCode::from(code as u8)
}
