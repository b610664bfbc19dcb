//! Deterministic first-order solver for least-squares objectives under
//! linear-inequality and affine-PSD constraints.
//!
//! The problem is `min ||A x_obj - b||^2` subject to `row_i . x >= bound_i`
//! and `F0_k + sum_j x_j F_jk >= 0`, where `x_obj` is the leading block of
//! `x` covered by the design matrix (auxiliary unknowns such as the KYP `X`
//! do not enter the objective). The iteration is an operator splitting
//! (ADMM) over the stacked constraint image:
//!
//! 1. a regularized least-squares step for `x` through a cached envelope
//!    Cholesky factorization of `2 A^T A + sigma I + rho M^T M`,
//! 2. Euclidean projection of the constraint image onto the product cone
//!    (halfspaces clamp, PSD blocks clip negative eigenvalues to zero),
//! 3. scaled dual updates.
//!
//! The penalty parameter adapts every `adapt_interval` iterations by a
//! residual-ratio rule (factor 2, bounds `[1e-4, 1e4]`), triggering a
//! refactorization. Everything is sequential and allocation patterns are
//! fixed, so two runs with identical inputs produce bitwise-identical
//! iterates.

mod cone;
mod oracle;
mod skyline;

pub use oracle::oracle_solve_small;

use nalgebra::{DMatrix, DVector};

use crate::{Error, Result};
use cone::ConstraintOps;
use skyline::{SkylineCholesky, SkylinePattern, SkylineValues};

/// One linear inequality `sum_j coeffs[j].1 * x[coeffs[j].0] >= bound`.
#[derive(Debug, Clone)]
pub struct LinearInequality {
    pub coeffs: Vec<(usize, f64)>,
    pub bound: f64,
}

/// One affine-PSD constraint `F0 + sum_j x_j Fj >= 0` over symmetric
/// `size x size` matrices. Entries are stored for the upper triangle
/// (`row <= col`) and mirrored on evaluation.
#[derive(Debug, Clone)]
pub struct AffinePsdBlock {
    pub size: usize,
    /// Constant part: `(row, col, value)` with `row <= col`.
    pub f0: Vec<(usize, usize, f64)>,
    /// Variable part: `(var, row, col, value)` with `row <= col`.
    pub terms: Vec<(usize, usize, usize, f64)>,
}

impl AffinePsdBlock {
    /// Evaluates the affine map at `x` as a dense symmetric matrix.
    pub fn evaluate(&self, x: &[f64]) -> DMatrix<f64> {
        let mut m = DMatrix::<f64>::zeros(self.size, self.size);
        for &(r, c, v) in &self.f0 {
            m[(r, c)] += v;
            if r != c {
                m[(c, r)] += v;
            }
        }
        for &(j, r, c, v) in &self.terms {
            let xv = x[j];
            m[(r, c)] += v * xv;
            if r != c {
                m[(c, r)] += v * xv;
            }
        }
        m
    }

    /// Smallest eigenvalue of the block at `x`.
    pub fn min_eig(&self, x: &[f64]) -> f64 {
        self.evaluate(x).symmetric_eigen().eigenvalues.min()
    }
}

/// Quadratic objective with linear-inequality and affine-PSD constraints.
///
/// `design` covers the first `design.ncols()` coordinates of `x`; any
/// further coordinates (up to `dim`) are constraint-only auxiliaries.
#[derive(Debug, Clone)]
pub struct ConstrainedLSProblem {
    design: DMatrix<f64>,
    target: DVector<f64>,
    dim: usize,
    pub linear_ineqs: Vec<LinearInequality>,
    pub psd_blocks: Vec<AffinePsdBlock>,
}

impl ConstrainedLSProblem {
    pub fn new(
        design: DMatrix<f64>,
        target: DVector<f64>,
        dim: usize,
        linear_ineqs: Vec<LinearInequality>,
        psd_blocks: Vec<AffinePsdBlock>,
    ) -> Result<Self> {
        if design.nrows() != target.len() {
            return Err(Error::dim(format!(
                "design has {} rows, target has {}",
                design.nrows(),
                target.len()
            )));
        }
        if design.ncols() > dim {
            return Err(Error::dim(format!(
                "design has {} columns but the problem has only {dim} unknowns",
                design.ncols()
            )));
        }
        if design.iter().any(|v| !v.is_finite()) || target.iter().any(|v| !v.is_finite()) {
            return Err(Error::numeric("objective data must be finite"));
        }
        for (i, ineq) in linear_ineqs.iter().enumerate() {
            if ineq.coeffs.iter().any(|&(j, _)| j >= dim) {
                return Err(Error::dim(format!(
                    "linear inequality {i} references an unknown out of range"
                )));
            }
        }
        for (i, block) in psd_blocks.iter().enumerate() {
            let bad_entry = block.f0.iter().any(|&(r, c, _)| r > c || c >= block.size)
                || block
                    .terms
                    .iter()
                    .any(|&(j, r, c, _)| j >= dim || r > c || c >= block.size);
            if bad_entry {
                return Err(Error::dim(format!(
                    "PSD block {i} has an out-of-range entry"
                )));
            }
        }
        Ok(Self {
            design,
            target,
            dim,
            linear_ineqs,
            psd_blocks,
        })
    }

    pub fn unconstrained(design: DMatrix<f64>, target: DVector<f64>) -> Result<Self> {
        let dim = design.ncols();
        Self::new(design, target, dim, Vec::new(), Vec::new())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn objective_dim(&self) -> usize {
        self.design.ncols()
    }

    pub fn design(&self) -> &DMatrix<f64> {
        &self.design
    }

    pub fn target(&self) -> &DVector<f64> {
        &self.target
    }

    /// `||A x_obj - b||^2` at `x`.
    pub fn objective(&self, x: &[f64]) -> f64 {
        let d = self.design.ncols();
        let mut acc = 0.0;
        for i in 0..self.design.nrows() {
            let mut r = -self.target[i];
            for j in 0..d {
                r += self.design[(i, j)] * x[j];
            }
            acc += r * r;
        }
        acc
    }

    fn count_constraint_rows(&self) -> usize {
        self.linear_ineqs.len()
            + self
                .psd_blocks
                .iter()
                .map(|b| b.size * (b.size + 1) / 2)
                .sum::<usize>()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    MaxIters,
    /// Reserved: first-order certificates are never trusted to assert
    /// infeasibility, so `solve` reports `MaxIters` and leaves diagnosis to
    /// `check_solution`.
    InfeasibleDetected,
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub x: DVector<f64>,
    pub objective: f64,
    pub status: SolveStatus,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct SolveOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_iters: usize,
    /// Proximal regularization of the x-step.
    pub sigma: f64,
    /// Initial penalty parameter.
    pub penalty_init: f64,
    /// Over-relaxation factor in (0, 2).
    pub relaxation: f64,
    /// Penalty adaptation period, in iterations.
    pub adapt_interval: usize,
    /// Reserved for interface stability; the iteration is deterministic and
    /// does not consume randomness.
    pub seed: Option<u64>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            abs_tol: 1e-8,
            rel_tol: 1e-8,
            max_iters: 200_000,
            sigma: 1e-6,
            penalty_init: 1.0,
            relaxation: 1.0,
            adapt_interval: 100,
            seed: None,
        }
    }
}

impl SolveOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            abs_tol: tol,
            rel_tol: tol,
            ..Self::default()
        }
    }
}

const PENALTY_MIN: f64 = 1e-4;
const PENALTY_MAX: f64 = 1e4;
const PENALTY_RATIO: f64 = 10.0;

/// Solves the constrained least-squares problem. `MaxIters` returns the
/// best iterate seen rather than failing silently; NaN anywhere aborts with
/// a numeric-failure error.
pub fn solve(problem: &ConstrainedLSProblem, options: &SolveOptions) -> Result<Solution> {
    if problem.count_constraint_rows() == 0 {
        return solve_unconstrained(problem, options);
    }
    let dim = problem.dim;

    // Equilibration: normalize every linear row to unit norm (same feasible
    // set) and the objective to a unit-scale Hessian (same minimizer), so
    // the penalty parameter starts balanced.
    let scaled_rows: Vec<LinearInequality> = problem
        .linear_ineqs
        .iter()
        .map(|ineq| {
            let norm = ineq.coeffs.iter().map(|&(_, c)| c * c).sum::<f64>().sqrt();
            let s = if norm > 1e-12 { 1.0 / norm } else { 1.0 };
            LinearInequality {
                coeffs: ineq.coeffs.iter().map(|&(j, c)| (j, c * s)).collect(),
                bound: ineq.bound * s,
            }
        })
        .collect();
    let ops = ConstraintOps::build(dim, &scaled_rows, &problem.psd_blocks);

    // Envelope of 2 A^T A + sigma I + rho M^T M.
    let d_obj = problem.design.ncols();
    let mut first: Vec<usize> = (0..dim).collect();
    for i in 0..d_obj {
        first[i] = 0;
    }
    for row in ops.rows() {
        if let Some(min_var) = row.iter().map(|&(v, _)| v).min() {
            for &(v, _) in row {
                if min_var < first[v] {
                    first[v] = min_var;
                }
            }
        }
    }
    let pattern = SkylinePattern::new(first);

    // Constant part: obj_scale * 2 A^T A + sigma I.
    let ata = problem.design.transpose() * &problem.design;
    let obj_scale = {
        let peak = (0..d_obj).map(|i| ata[(i, i)].abs()).fold(0.0f64, f64::max);
        if peak > 1.0 {
            1.0 / peak
        } else {
            1.0
        }
    };
    let mut base = SkylineValues::zeros(&pattern);
    for i in 0..d_obj {
        for j in 0..=i {
            base.add(&pattern, i, j, obj_scale * 2.0 * ata[(i, j)]);
        }
    }
    for i in 0..dim {
        base.add(&pattern, i, i, options.sigma);
    }

    // Penalty part: M^T M.
    let mut gram = SkylineValues::zeros(&pattern);
    for row in ops.rows() {
        for (a_idx, &(va, ca)) in row.iter().enumerate() {
            for &(vb, cb) in &row[a_idx..] {
                gram.add(&pattern, va.max(vb), va.min(vb), ca * cb);
            }
        }
    }

    let atb2: DVector<f64> = problem.design.transpose() * &problem.target * (2.0 * obj_scale);

    let mut rho = options.penalty_init.clamp(PENALTY_MIN, PENALTY_MAX);
    let mut chol = SkylineCholesky::factorize(&pattern, &base, &gram, rho)?;

    let nrows = ops.nrows;
    let mut x = vec![0.0f64; dim];
    let mut v = vec![0.0f64; nrows];
    ops.apply(&x, &mut v);
    let mut z = vec![0.0f64; nrows];
    ops.project(&v, &mut z);
    let mut u = vec![0.0f64; nrows];

    let mut rhs = vec![0.0f64; dim];
    let mut row_tmp = vec![0.0f64; nrows];
    let mut dual_tmp = vec![0.0f64; dim];
    let mut z_prev = vec![0.0f64; nrows];
    let mut best_x = x.clone();
    let mut best_score = f64::INFINITY;
    let mut best_resid = (f64::INFINITY, f64::INFINITY);

    let inf_norm = |s: &[f64]| s.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
    let trace = std::env::var_os("IFIR_SOLVER_TRACE").is_some();

    let mut iterations = 0;
    for iter in 1..=options.max_iters {
        iterations = iter;

        // x-step: (2A'A + sigma I + rho M'M) x = 2A'b + sigma x + rho M'(z - c - u)
        for i in 0..dim {
            rhs[i] = options.sigma * x[i];
        }
        for i in 0..d_obj {
            rhs[i] += atb2[i];
        }
        for i in 0..nrows {
            row_tmp[i] = z[i] - ops.constant[i] - u[i];
        }
        ops.adjoint_add(&row_tmp, rho, &mut rhs);
        chol.solve_in_place(&mut rhs);
        x.copy_from_slice(&rhs);

        // z-step and dual update, over-relaxed
        ops.apply(&x, &mut v);
        z_prev.copy_from_slice(&z);
        let alpha = options.relaxation;
        for i in 0..nrows {
            let v_rel = alpha * v[i] + (1.0 - alpha) * z_prev[i];
            row_tmp[i] = v_rel + u[i];
        }
        ops.project(&row_tmp, &mut z);
        for i in 0..nrows {
            let v_rel = alpha * v[i] + (1.0 - alpha) * z_prev[i];
            u[i] += v_rel - z[i];
        }

        // residuals
        let mut r_prim = 0.0f64;
        for i in 0..nrows {
            r_prim = r_prim.max((v[i] - z[i]).abs());
        }
        for i in 0..nrows {
            row_tmp[i] = z[i] - z_prev[i];
        }
        dual_tmp.iter_mut().for_each(|t| *t = 0.0);
        ops.adjoint_add(&row_tmp, rho, &mut dual_tmp);
        let r_dual = inf_norm(&dual_tmp);

        if !r_prim.is_finite() || !r_dual.is_finite() {
            return Err(Error::numeric(format!(
                "solver diverged at iteration {iter}"
            )));
        }

        let eps_prim = options.abs_tol + options.rel_tol * inf_norm(&v).max(inf_norm(&z));
        dual_tmp.iter_mut().for_each(|t| *t = 0.0);
        ops.adjoint_add(&u, rho, &mut dual_tmp);
        let eps_dual = options.abs_tol + options.rel_tol * inf_norm(&dual_tmp);

        let score = (r_prim / eps_prim.max(f64::MIN_POSITIVE))
            .max(r_dual / eps_dual.max(f64::MIN_POSITIVE));
        if score < best_score {
            best_score = score;
            best_x.copy_from_slice(&x);
            best_resid = (r_prim, r_dual);
        }

        if trace && (iter % 500 == 0 || iter == 1) {
            eprintln!(
                "iter {iter}: r_prim={r_prim:.3e} (eps {eps_prim:.3e}) r_dual={r_dual:.3e} (eps {eps_dual:.3e}) rho={rho:.3e}"
            );
        }

        if r_prim <= eps_prim && r_dual <= eps_dual {
            let objective = problem.objective(&x);
            return Ok(Solution {
                x: DVector::from_vec(x),
                objective,
                status: SolveStatus::Optimal,
                primal_residual: r_prim,
                dual_residual: r_dual,
                iterations: iter,
            });
        }

        if options.adapt_interval > 0 && iter % options.adapt_interval == 0 {
            let mut new_rho = rho;
            if r_prim > PENALTY_RATIO * r_dual {
                new_rho = (rho * 2.0).clamp(PENALTY_MIN, PENALTY_MAX);
            } else if r_dual > PENALTY_RATIO * r_prim {
                new_rho = (rho / 2.0).clamp(PENALTY_MIN, PENALTY_MAX);
            }
            if new_rho != rho {
                let rescale = rho / new_rho;
                for ui in u.iter_mut() {
                    *ui *= rescale;
                }
                rho = new_rho;
                chol = SkylineCholesky::factorize(&pattern, &base, &gram, rho)?;
            }
        }
    }

    let objective = problem.objective(&best_x);
    Ok(Solution {
        x: DVector::from_vec(best_x),
        objective,
        status: SolveStatus::MaxIters,
        primal_residual: best_resid.0,
        dual_residual: best_resid.1,
        iterations,
    })
}

/// Proximal-point iteration for the unconstrained case; terminates on the
/// gradient residual so rank-deficient regressors still return a minimizer.
fn solve_unconstrained(problem: &ConstrainedLSProblem, options: &SolveOptions) -> Result<Solution> {
    let dim = problem.dim;
    let d_obj = problem.design.ncols();
    let pattern = SkylinePattern::new((0..dim).map(|i| if i < d_obj { 0 } else { i }).collect());
    let mut base = SkylineValues::zeros(&pattern);
    let ata = problem.design.transpose() * &problem.design;
    for i in 0..d_obj {
        for j in 0..=i {
            base.add(&pattern, i, j, 2.0 * ata[(i, j)]);
        }
    }
    for i in 0..dim {
        base.add(&pattern, i, i, options.sigma);
    }
    let zero = SkylineValues::zeros(&pattern);
    let chol = SkylineCholesky::factorize(&pattern, &base, &zero, 0.0)?;
    let atb2: DVector<f64> = problem.design.transpose() * &problem.target * 2.0;

    let mut x = vec![0.0f64; dim];
    let mut rhs = vec![0.0f64; dim];
    let mut iterations = 0;
    let mut grad_res = f64::INFINITY;
    for iter in 1..=options.max_iters {
        iterations = iter;
        for i in 0..dim {
            rhs[i] = options.sigma * x[i];
        }
        for i in 0..d_obj {
            rhs[i] += atb2[i];
        }
        chol.solve_in_place(&mut rhs);
        x.copy_from_slice(&rhs);
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::numeric(format!(
                "solver diverged at iteration {iter}"
            )));
        }

        // gradient of ||Ax-b||^2 restricted to the objective block
        let xv = DVector::from_column_slice(&x[..d_obj]);
        let grad = problem.design.transpose() * (&problem.design * &xv - &problem.target) * 2.0;
        grad_res = grad.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
        if grad_res <= options.abs_tol {
            let objective = problem.objective(&x);
            return Ok(Solution {
                x: DVector::from_vec(x),
                objective,
                status: SolveStatus::Optimal,
                primal_residual: 0.0,
                dual_residual: grad_res,
                iterations: iter,
            });
        }
    }
    let objective = problem.objective(&x);
    Ok(Solution {
        x: DVector::from_vec(x),
        objective,
        status: SolveStatus::MaxIters,
        primal_residual: 0.0,
        dual_residual: grad_res,
        iterations,
    })
}

/// Per-constraint verification of a candidate solution, independent of the
/// solver internals: recomputed objective, worst linear violation, and the
/// smallest eigenvalue of every PSD block.
#[derive(Debug, Clone)]
pub struct CheckReport {
    pub objective: f64,
    pub max_linear_violation: f64,
    /// Index (into `linear_ineqs`) of the most violated row, if any row is
    /// violated.
    pub worst_linear: Option<usize>,
    pub psd_min_eigs: Vec<f64>,
    pub tol: f64,
    pub pass: bool,
}

pub fn check_solution(problem: &ConstrainedLSProblem, x: &[f64], tol: f64) -> Result<CheckReport> {
    if x.len() != problem.dim {
        return Err(Error::dim(format!(
            "candidate has {} coordinates, problem has {}",
            x.len(),
            problem.dim
        )));
    }
    let objective = problem.objective(x);
    let mut max_violation = 0.0f64;
    let mut worst = None;
    for (i, ineq) in problem.linear_ineqs.iter().enumerate() {
        let lhs: f64 = ineq.coeffs.iter().map(|&(j, c)| c * x[j]).sum();
        let violation = ineq.bound - lhs;
        if violation > max_violation {
            max_violation = violation;
            worst = Some(i);
        }
    }
    let psd_min_eigs: Vec<f64> = problem.psd_blocks.iter().map(|b| b.min_eig(x)).collect();
    let pass = max_violation <= tol && psd_min_eigs.iter().all(|&e| e >= -tol);
    Ok(CheckReport {
        objective,
        max_linear_violation: max_violation,
        worst_linear: worst,
        psd_min_eigs,
        tol,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn identity_problem(target: &[f64]) -> ConstrainedLSProblem {
        let n = target.len();
        ConstrainedLSProblem::unconstrained(
            DMatrix::identity(n, n),
            DVector::from_column_slice(target),
        )
        .unwrap()
    }

    #[test]
    fn unconstrained_identity_recovers_target() {
        let p = identity_problem(&[1.0, 2.0]);
        let s = solve(&p, &SolveOptions::default()).unwrap();
        assert_eq!(s.status, SolveStatus::Optimal);
        assert_relative_eq!(s.x[0], 1.0, epsilon = 1e-7);
        assert_relative_eq!(s.x[1], 2.0, epsilon = 1e-7);
        assert!(s.objective < 1e-12);
    }

    #[test]
    fn active_halfspace_clamps_solution() {
        // min (x-1)^2 s.t. x >= 2
        let mut p = identity_problem(&[1.0]);
        p.linear_ineqs.push(LinearInequality {
            coeffs: vec![(0, 1.0)],
            bound: 2.0,
        });
        let s = solve(&p, &SolveOptions::default()).unwrap();
        assert_eq!(s.status, SolveStatus::Optimal);
        assert_relative_eq!(s.x[0], 2.0, epsilon = 1e-6);
        assert_relative_eq!(s.objective, 1.0, epsilon = 1e-5);
    }

    #[test]
    fn nearest_psd_matrix_by_eigenvalue_clipping() {
        // min ||X - diag(1,-1)||_F^2 s.t. X >= 0 -> X = diag(1, 0)
        // x = [X00, X01, X11]; design = diag(1, sqrt(2), 1)
        let design = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 2f64.sqrt(), 1.0]));
        let target = DVector::from_vec(vec![1.0, 0.0, -1.0]);
        let block = AffinePsdBlock {
            size: 2,
            f0: vec![],
            terms: vec![(0, 0, 0, 1.0), (1, 0, 1, 1.0), (2, 1, 1, 1.0)],
        };
        let p = ConstrainedLSProblem::new(design, target, 3, vec![], vec![block]).unwrap();
        let s = solve(&p, &SolveOptions::default()).unwrap();
        assert_eq!(s.status, SolveStatus::Optimal);
        assert_relative_eq!(s.x[0], 1.0, epsilon = 1e-6);
        assert_relative_eq!(s.x[1], 0.0, epsilon = 1e-6);
        assert_relative_eq!(s.x[2], 0.0, epsilon = 1e-6);
        assert_relative_eq!(s.objective, 1.0, epsilon = 1e-5);
    }

    #[test]
    fn optimal_solutions_pass_independent_check() {
        let mut p = identity_problem(&[1.0, -3.0]);
        p.linear_ineqs.push(LinearInequality {
            coeffs: vec![(0, 1.0), (1, 1.0)],
            bound: 0.5,
        });
        let s = solve(&p, &SolveOptions::default()).unwrap();
        assert_eq!(s.status, SolveStatus::Optimal);
        let report = check_solution(&p, s.x.as_slice(), 1e-5).unwrap();
        assert!(report.pass, "violation {}", report.max_linear_violation);
        assert_relative_eq!(report.objective, s.objective, max_relative = 1e-10);
    }

    #[test]
    fn check_reports_named_violated_row() {
        let p = {
            let mut p = identity_problem(&[0.0, 0.0]);
            p.linear_ineqs.push(LinearInequality {
                coeffs: vec![(0, 1.0)],
                bound: -1.0,
            });
            p.linear_ineqs.push(LinearInequality {
                coeffs: vec![(1, 1.0)],
                bound: 0.5,
            });
            p
        };
        let report = check_solution(&p, &[0.0, 0.0], 1e-6).unwrap();
        assert!(!report.pass);
        assert_eq!(report.worst_linear, Some(1));
        assert_relative_eq!(report.max_linear_violation, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn feasible_interior_point_passes_check() {
        let mut p = identity_problem(&[0.0]);
        p.linear_ineqs.push(LinearInequality {
            coeffs: vec![(0, 1.0)],
            bound: -1.0,
        });
        let report = check_solution(&p, &[0.0], 1e-6).unwrap();
        assert!(report.pass);
        assert_eq!(report.worst_linear, None);
    }

    #[test]
    fn constrained_objective_dominates_unconstrained() {
        let design = DMatrix::from_row_slice(4, 2, &[1.0, 0.3, 0.2, 1.0, 0.5, 0.5, 1.0, -0.4]);
        let target = DVector::from_vec(vec![1.0, -0.5, 0.25, 0.75]);
        let free = ConstrainedLSProblem::unconstrained(design.clone(), target.clone()).unwrap();
        let s_free = solve(&free, &SolveOptions::default()).unwrap();
        let mut tied = free.clone();
        tied.linear_ineqs.push(LinearInequality {
            coeffs: vec![(0, 1.0)],
            bound: 2.0,
        });
        let s_tied = solve(&tied, &SolveOptions::default()).unwrap();
        assert!(s_tied.objective >= s_free.objective - 1e-9);
    }

    #[test]
    fn rank_deficient_unconstrained_still_returns_minimizer() {
        // two identical columns: any split of the weight is optimal
        let design = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 2.0, 2.0]);
        let target = DVector::from_vec(vec![1.0, 2.0]);
        let p = ConstrainedLSProblem::unconstrained(design.clone(), target.clone()).unwrap();
        let s = solve(&p, &SolveOptions::default()).unwrap();
        assert_eq!(s.status, SolveStatus::Optimal);
        let r = &design * &s.x - &target;
        assert!(r.norm() < 1e-6, "residual {}", r.norm());
    }

    #[test]
    fn solver_is_bitwise_deterministic() {
        let design = DMatrix::from_row_slice(3, 2, &[1.0, 0.5, -0.25, 1.0, 0.75, 0.3]);
        let target = DVector::from_vec(vec![0.4, -1.0, 0.9]);
        let block = AffinePsdBlock {
            size: 2,
            f0: vec![(0, 0, 0.1), (1, 1, 0.1)],
            terms: vec![(0, 0, 0, 1.0), (1, 0, 1, 0.5)],
        };
        let mut p = ConstrainedLSProblem::new(design, target, 2, vec![], vec![block]).unwrap();
        p.linear_ineqs.push(LinearInequality {
            coeffs: vec![(1, 1.0)],
            bound: -0.2,
        });
        let a = solve(&p, &SolveOptions::default()).unwrap();
        let b = solve(&p, &SolveOptions::default()).unwrap();
        assert_eq!(a.x.as_slice(), b.x.as_slice());
        assert_eq!(a.iterations, b.iterations);
    }

    #[test]
    fn max_iters_reports_best_iterate() {
        let mut p = identity_problem(&[1.0]);
        p.linear_ineqs.push(LinearInequality {
            coeffs: vec![(0, 1.0)],
            bound: 2.0,
        });
        let opts = SolveOptions {
            max_iters: 3,
            ..SolveOptions::default()
        };
        let s = solve(&p, &opts).unwrap();
        assert_eq!(s.status, SolveStatus::MaxIters);
        assert!(s.x[0].is_finite());
    }

    #[test]
    fn auxiliary_coordinates_outside_objective_are_allowed() {
        // dim 2, objective only on x0; constraint ties x1 from below
        let design = DMatrix::from_element(1, 1, 1.0);
        let target = DVector::from_element(1, 3.0);
        let lin = vec![LinearInequality {
            coeffs: vec![(1, 1.0)],
            bound: 5.0,
        }];
        let p = ConstrainedLSProblem::new(design, target, 2, lin, vec![]).unwrap();
        let s = solve(&p, &SolveOptions::default()).unwrap();
        assert_eq!(s.status, SolveStatus::Optimal);
        assert_relative_eq!(s.x[0], 3.0, epsilon = 1e-6);
        assert!(s.x[1] >= 5.0 - 1e-6);
    }
}
