use std::time::Instant;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::HermitianMatrix;

/// Stopping controls shared by every iterative solver.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolveOptions {
    /// Relative residual target.
    pub tol: f64,
    pub max_iter: usize,
    /// Relative update size below which the iteration is considered stuck.
    pub stagnation_tol: f64,
}

impl SolveOptions {
    /// Budget for linearly convergent fixed-point iterations.
    pub fn basic() -> Self {
        Self {
            tol: 1e-12,
            max_iter: 10_000,
            stagnation_tol: 1e-15,
        }
    }

    /// Budget for doubling iterations.
    pub fn doubling() -> Self {
        Self {
            max_iter: 60,
            ..Self::basic()
        }
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) || self.max_iter < 1 || !(self.stagnation_tol >= 0.0) {
            return Err(Error::InvalidSpec(format!("invalid solve options {self:?}")));
        }
        Ok(())
    }
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self::basic()
    }
}

/// Outcome of an iterative solve.
///
/// `residual_history[0]` is the residual of the starting iterate and entry
/// `k` the residual after `k` steps, so the history has `iterations + 1`
/// entries. `elapsed_ns` runs parallel to it.
#[derive(Clone, Debug)]
pub struct SolveReport {
    pub x: HermitianMatrix,
    pub converged: bool,
    pub iterations: usize,
    pub residual_history: Vec<f64>,
    pub elapsed_ns: Vec<u64>,
    /// Geometric mean of the last (up to five) successive ratios of update
    /// norms `‖X_{k+1} - X_k‖`.
    pub rate_estimate: f64,
    pub closed_loop_radius: Option<f64>,
}

impl SolveReport {
    pub fn final_residual(&self) -> f64 {
        self.residual_history.last().copied().unwrap_or(f64::NAN)
    }

    /// Turns a non-converged report into [`Error::NotConverged`].
    pub fn into_converged(self) -> Result<Self> {
        if self.converged {
            Ok(self)
        } else {
            Err(Error::NotConverged {
                iterations: self.iterations,
                residual: self.final_residual(),
            })
        }
    }

    pub fn summary(&self) -> ReportSummary {
        ReportSummary {
            converged: self.converged,
            iterations: self.iterations,
            final_residual: self.final_residual(),
            rate_estimate: self.rate_estimate,
            closed_loop_radius: self.closed_loop_radius,
            residual_history: self.residual_history.clone(),
        }
    }
}

/// Serializable view of a report without the solution matrix.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct ReportSummary {
    pub converged: bool,
    pub iterations: usize,
    pub final_residual: f64,
    pub rate_estimate: f64,
    pub closed_loop_radius: Option<f64>,
    pub residual_history: Vec<f64>,
}

/// Geometric mean of the last `window` successive ratios of a positive
/// sequence. Zero entries end the usable tail.
pub fn tail_rate(values: &[f64], window: usize) -> f64 {
    let tail: Vec<f64> = values
        .iter()
        .rev()
        .take_while(|&&v| v > 0.0 && v.is_finite())
        .take(window + 1)
        .copied()
        .collect();
    if tail.len() < 2 {
        return 0.0;
    }
    let m = (tail.len() - 1) as f64;
    (tail[0] / tail[tail.len() - 1]).powf(1.0 / m)
}

/// Records residuals, timestamps and update norms while a solver runs.
pub(crate) struct Tracker {
    start: Instant,
    residuals: Vec<f64>,
    elapsed: Vec<u64>,
    updates: Vec<f64>,
}

impl Tracker {
    pub(crate) fn new() -> Self {
        Self {
            start: Instant::now(),
            residuals: Vec::new(),
            elapsed: Vec::new(),
            updates: Vec::new(),
        }
    }

    pub(crate) fn record(&mut self, residual: f64) {
        self.residuals.push(residual);
        self.elapsed.push(self.start.elapsed().as_nanos() as u64);
    }

    pub(crate) fn record_update(&mut self, norm: f64) {
        self.updates.push(norm);
    }

    pub(crate) fn last_residual(&self) -> f64 {
        self.residuals.last().copied().unwrap_or(f64::INFINITY)
    }

    pub(crate) fn finish(self, x: HermitianMatrix, converged: bool, iterations: usize) -> SolveReport {
        SolveReport {
            x,
            converged,
            iterations,
            rate_estimate: tail_rate(&self.updates, 5),
            residual_history: self.residuals,
            elapsed_ns: self.elapsed,
            closed_loop_radius: None,
        }
    }
}

/// `a / b` with `0/0 = 0`.
pub(crate) fn ratio(a: f64, b: f64) -> f64 {
    if a == 0.0 {
        0.0
    } else {
        a / b
    }
}
