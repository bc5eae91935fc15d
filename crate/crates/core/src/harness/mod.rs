//! File formats, generators and command drivers behind the `riccati` binary.

pub mod generate;
pub mod commands;
pub mod problem;

pub use generate::{gen_problem, GeneratorSpec, SplitMix64};
pub use problem::{load_problem, parse_shifts, save_problem, save_report, ProblemFile, ProblemKind};
