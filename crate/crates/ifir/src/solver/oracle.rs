//! Independent reference solver for tiny instances, used to validate the
//! splitting iteration. Supports two classes:
//!
//! * `dim <= 3` with linear inequalities only — exhaustive active-set
//!   enumeration over equality-constrained KKT systems;
//! * a single PSD block encoding a plain Frobenius projection
//!   `min ||X - T||_F^2 s.t. X >= 0` — solved by the analytic eigenvalue
//!   clipping.
//!
//! This path shares no iteration machinery with [`super::solve`].

use nalgebra::{DMatrix, DVector};

use super::cone::{psd_project, svec_coord, svec_len};
use super::{ConstrainedLSProblem, Solution, SolveStatus};
use crate::{Error, Result};

const MAX_ORACLE_INEQS: usize = 16;
const FEAS_TOL: f64 = 1e-9;

pub fn oracle_solve_small(problem: &ConstrainedLSProblem) -> Result<Solution> {
    if problem.psd_blocks.is_empty() {
        if problem.dim() > 3 {
            return Err(Error::domain(
                "oracle supports at most 3 unknowns for linear problems",
            ));
        }
        if problem.dim() != problem.objective_dim() {
            return Err(Error::domain(
                "oracle requires every unknown to enter the objective",
            ));
        }
        if problem.linear_ineqs.len() > MAX_ORACLE_INEQS {
            return Err(Error::domain("oracle supports at most 16 inequalities"));
        }
        return active_set_enumeration(problem);
    }
    if problem.linear_ineqs.is_empty() && problem.psd_blocks.len() == 1 {
        return frobenius_projection(problem);
    }
    Err(Error::domain(
        "problem outside the oracle's supported class",
    ))
}

fn active_set_enumeration(problem: &ConstrainedLSProblem) -> Result<Solution> {
    let d = problem.dim();
    let n = problem.linear_ineqs.len();
    let ata2 = problem.design().transpose() * problem.design() * 2.0;
    let atb2 = problem.design().transpose() * problem.target() * 2.0;

    let rows: Vec<DVector<f64>> = problem
        .linear_ineqs
        .iter()
        .map(|ineq| {
            let mut r = DVector::zeros(d);
            for &(j, c) in &ineq.coeffs {
                r[j] += c;
            }
            r
        })
        .collect();
    let bounds: Vec<f64> = problem.linear_ineqs.iter().map(|i| i.bound).collect();

    let feasible = |x: &DVector<f64>| {
        rows.iter()
            .zip(&bounds)
            .all(|(r, &b)| r.dot(x) >= b - FEAS_TOL * (1.0 + b.abs()))
    };

    let mut best: Option<(f64, DVector<f64>)> = None;
    // every optimum of a convex QP solves the KKT system of its active set,
    // so trying all subsets up to size d and keeping the best feasible
    // candidate is exact
    for mask in 0u32..(1u32 << n) {
        let active: Vec<usize> = (0..n).filter(|&i| mask & (1 << i) != 0).collect();
        if active.len() > d {
            continue;
        }
        let k = active.len();
        let mut kkt = DMatrix::<f64>::zeros(d + k, d + k);
        kkt.view_mut((0, 0), (d, d)).copy_from(&ata2);
        for (idx, &c) in active.iter().enumerate() {
            for j in 0..d {
                kkt[(d + idx, j)] = rows[c][j];
                kkt[(j, d + idx)] = rows[c][j];
            }
        }
        let mut rhs = DVector::<f64>::zeros(d + k);
        rhs.rows_mut(0, d).copy_from(&atb2);
        for (idx, &c) in active.iter().enumerate() {
            rhs[d + idx] = bounds[c];
        }
        let Some(sol) = kkt.lu().solve(&rhs) else {
            continue;
        };
        let x = sol.rows(0, d).into_owned();
        if x.iter().any(|v| !v.is_finite()) || !feasible(&x) {
            continue;
        }
        let obj = problem.objective(x.as_slice());
        if best.as_ref().is_none_or(|(bo, _)| obj < *bo) {
            best = Some((obj, x));
        }
    }

    let (objective, x) =
        best.ok_or_else(|| Error::domain("oracle found no feasible active-set candidate"))?;
    Ok(Solution {
        x,
        objective,
        status: SolveStatus::Optimal,
        primal_residual: 0.0,
        dual_residual: 0.0,
        iterations: 0,
    })
}

/// Detects `min ||X - T||_F^2 s.t. X >= 0` written over plain upper-triangle
/// coordinates (design columns weighted 1 on diagonal entries and sqrt(2)
/// off-diagonal) and solves it by eigenvalue clipping.
fn frobenius_projection(problem: &ConstrainedLSProblem) -> Result<Solution> {
    let block = &problem.psd_blocks[0];
    let s = block.size;
    let d = problem.dim();
    if d != svec_len(s) || problem.objective_dim() != d {
        return Err(Error::domain(
            "oracle projection class needs x = upper triangle of X",
        ));
    }
    if !block.f0.is_empty() {
        return Err(Error::domain("oracle projection class needs F0 = 0"));
    }
    // terms must be exactly the identity map x_j -> X entry j
    if block.terms.len() != d {
        return Err(Error::domain(
            "oracle projection class needs identity PSD terms",
        ));
    }
    let mut seen = vec![false; d];
    for &(j, r, c, v) in &block.terms {
        if svec_coord(r, c) != j || v != 1.0 || seen[j] {
            return Err(Error::domain(
                "oracle projection class needs identity PSD terms",
            ));
        }
        seen[j] = true;
    }
    // objective must be the Frobenius distance: A^T A = diag(w), w = 1 or 2
    let ata = problem.design().transpose() * problem.design();
    let scale = ata[(0, 0)];
    for r in 0..d {
        for c in 0..d {
            let want = if r == c {
                let (row, col) = coord_to_pair(r, s);
                if row == col {
                    scale
                } else {
                    2.0 * scale
                }
            } else {
                0.0
            };
            if (ata[(r, c)] - want).abs() > 1e-10 * (1.0 + scale.abs()) {
                return Err(Error::domain(
                    "oracle projection class needs a Frobenius objective",
                ));
            }
        }
    }
    // unconstrained minimizer in plain coordinates
    let atb = problem.design().transpose() * problem.target();
    let mut t = DMatrix::<f64>::zeros(s, s);
    for j in 0..d {
        let (r, c) = coord_to_pair(j, s);
        let w = if r == c { scale } else { 2.0 * scale };
        let v = atb[j] / w;
        t[(r, c)] = v;
        t[(c, r)] = v;
    }
    let projected = psd_project(&t);
    let mut x = DVector::<f64>::zeros(d);
    for j in 0..d {
        let (r, c) = coord_to_pair(j, s);
        x[j] = projected[(r, c)];
    }
    let objective = problem.objective(x.as_slice());
    Ok(Solution {
        x,
        objective,
        status: SolveStatus::Optimal,
        primal_residual: 0.0,
        dual_residual: 0.0,
        iterations: 0,
    })
}

fn coord_to_pair(j: usize, s: usize) -> (usize, usize) {
    for c in 0..s {
        let base = c * (c + 1) / 2;
        if j < base + c + 1 {
            return (j - base, c);
        }
    }
    unreachable!("svec coordinate out of range")
}
