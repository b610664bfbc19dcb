//! Timing comparison of the three passivity formulations on identical data.

use std::time::Instant;

use crate::design::{build_problem, unconstrained_fit};
use crate::lti::DiscreteTransferFunction;
use crate::passivity::{
    finite_toeplitz_constraints, kyp_constraints, passivity_margin, posreal_constraints,
};
use crate::solver::{solve, SolveOptions, SolveStatus};
use crate::vrft::{assemble_problem, virtual_error_filtered, GammaMode};
use crate::{Result, SampledSignal};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BenchMethod {
    Kyp,
    /// Finite Toeplitz section with `n = m`.
    Toeplitz,
    /// Sampled positive realness with `M = m`.
    Posreal,
}

impl BenchMethod {
    pub fn name(&self) -> &'static str {
        match self {
            BenchMethod::Kyp => "kyp",
            BenchMethod::Toeplitz => "toeplitz",
            BenchMethod::Posreal => "posreal",
        }
    }

    pub fn parse(s: &str) -> Option<BenchMethod> {
        match s {
            "kyp" => Some(BenchMethod::Kyp),
            "toeplitz" => Some(BenchMethod::Toeplitz),
            "posreal" => Some(BenchMethod::Posreal),
            _ => None,
        }
    }
}

pub const ALL_METHODS: [BenchMethod; 3] = [
    BenchMethod::Kyp,
    BenchMethod::Toeplitz,
    BenchMethod::Posreal,
];

#[derive(Debug, Clone)]
pub struct BenchRow {
    pub method: BenchMethod,
    pub m: usize,
    pub assembly_seconds: f64,
    pub solve_seconds: Vec<f64>,
    pub iterations: usize,
    pub status: Option<SolveStatus>,
    pub objective: f64,
    pub margin: f64,
    pub error: Option<String>,
}

impl BenchRow {
    pub fn median_solve_seconds(&self) -> f64 {
        if self.solve_seconds.is_empty() {
            return f64::NAN;
        }
        let mut t = self.solve_seconds.clone();
        t.sort_by(|a, b| a.total_cmp(b));
        t[t.len() / 2]
    }
}

/// Runs every (method, order) pair sequentially on the same filtered data.
///
/// Constraint construction is deterministic: `gamma` free, `rho0` from the
/// unconstrained fit, `rho = 1`, `epsilon` scaled to the data. Solve time
/// excludes data filtering and constraint assembly, which is reported
/// separately; a failed design lands in the row's `error` instead of
/// aborting the table.
pub fn run_bench(
    u: &SampledSignal,
    y: &SampledSignal,
    mr: &DiscreteTransferFunction,
    orders: &[usize],
    methods: &[BenchMethod],
    repeats: usize,
    opts: &SolveOptions,
) -> Result<Vec<BenchRow>> {
    let (u_f, e_f) = virtual_error_filtered(u, y, mr)?;
    let mut rows = Vec::new();
    for &m in orders {
        for &method in methods {
            rows.push(bench_one(&u_f, &e_f, m, method, repeats, opts));
        }
    }
    Ok(rows)
}

fn bench_one(
    u_f: &SampledSignal,
    e_f: &SampledSignal,
    m: usize,
    method: BenchMethod,
    repeats: usize,
    opts: &SolveOptions,
) -> BenchRow {
    let mut row = BenchRow {
        method,
        m,
        assembly_seconds: 0.0,
        solve_seconds: Vec::new(),
        iterations: 0,
        status: None,
        objective: f64::NAN,
        margin: f64::NAN,
        error: None,
    };
    let mut attempt = || -> Result<()> {
        let t0 = Instant::now();
        let rs = assemble_problem(u_f, e_f, m, GammaMode::Free)?;
        let ls = unconstrained_fit(&rs, opts)?;
        let max_abs = ls.x.as_slice()[..m]
            .iter()
            .fold(0.0f64, |a, &b| a.max(b.abs()));
        let rho0 = 10.0 * max_abs.max(1e-6);
        let epsilon = 1e-4 * max_abs.max(1.0);
        let set = match method {
            BenchMethod::Kyp => kyp_constraints(m)?,
            BenchMethod::Toeplitz => finite_toeplitz_constraints(m, m, epsilon, rho0, 1.0)?,
            BenchMethod::Posreal => posreal_constraints(m, m, rho0, 1.0, Some(epsilon))?,
        };
        let problem = build_problem(&rs, &set)?;
        row.assembly_seconds = t0.elapsed().as_secs_f64();

        for _ in 0..repeats.max(1) {
            let t1 = Instant::now();
            let sol = solve(&problem, opts)?;
            row.solve_seconds.push(t1.elapsed().as_secs_f64());
            row.iterations = sol.iterations;
            row.status = Some(sol.status);
            row.objective = sol.objective;
            row.margin = passivity_margin(&sol.x.as_slice()[..m], 100_000)?;
        }
        Ok(())
    };
    if let Err(e) = attempt() {
        row.error = Some(e.to_string());
    }
    row
}
