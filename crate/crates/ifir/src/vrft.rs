//! Virtual reference feedback tuning: turns open-loop data `(u, y)` and a
//! reference model into the least-squares problem whose unknowns are the
//! iFIR coefficients.
//!
//! For a linear reference model the inverse-model step is removed by
//! filtering both sides with the model itself, so the fitted pair is
//! `(y - Mr y, Mr u)` rather than `(Mr^-1 y - y, u)`.

use nalgebra::{DMatrix, DVector};

use crate::lti::DiscreteTransferFunction;
use crate::{Error, Result, SampledSignal};

/// Whether the integral gain is an unknown of the fit or pinned.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GammaMode {
    Free,
    Fixed(f64),
}

/// The assembled least-squares data: minimize
/// `|| target - E g - gamma * E_int ||^2` over `(g, gamma)` (or over `g`
/// alone when gamma is fixed, in which case the integral column is already
/// folded into `target`).
#[derive(Debug, Clone)]
pub struct RegressorSystem {
    pub e_mat: DMatrix<f64>,
    pub e_int: DVector<f64>,
    pub target: DVector<f64>,
    pub ts: f64,
    pub m: usize,
    pub gamma: GammaMode,
}

impl RegressorSystem {
    /// Number of unknowns of the data-fitting part: `m`, plus one when the
    /// integral gain is free.
    pub fn unknowns(&self) -> usize {
        match self.gamma {
            GammaMode::Free => self.m + 1,
            GammaMode::Fixed(_) => self.m,
        }
    }

    /// Stacks `[E | E_int]` (gamma free) or `E` (gamma fixed) as the design
    /// matrix of the least-squares objective.
    pub fn design_matrix(&self) -> DMatrix<f64> {
        match self.gamma {
            GammaMode::Free => {
                let n = self.e_mat.nrows();
                let mut d = DMatrix::<f64>::zeros(n, self.m + 1);
                d.view_mut((0, 0), (n, self.m)).copy_from(&self.e_mat);
                d.view_mut((0, self.m), (n, 1)).copy_from(&self.e_int);
                d
            }
            GammaMode::Fixed(_) => self.e_mat.clone(),
        }
    }

    /// Residual `|| target - E g - gamma E_int ||` at a given controller.
    pub fn residual(&self, g: &[f64], gamma: f64) -> f64 {
        let mut r = self.target.clone();
        for (k, &gk) in g.iter().enumerate() {
            r -= self.e_mat.column(k) * gk;
        }
        if let GammaMode::Free = self.gamma {
            r -= &self.e_int * gamma;
        }
        r.norm()
    }
}

/// Filters the data with the reference model: `u_f = Mr u`,
/// `e_f = y - Mr y`, both by zero-initial-state simulation.
pub fn virtual_error_filtered(
    u: &SampledSignal,
    y: &SampledSignal,
    mr: &DiscreteTransferFunction,
) -> Result<(SampledSignal, SampledSignal)> {
    if u.len() != y.len() {
        return Err(Error::dim(format!(
            "u has {} samples, y has {}",
            u.len(),
            y.len()
        )));
    }
    u.same_ts(y)?;
    crate::signal::check_ts_match(mr.ts(), u.ts())?;
    mr.check_stable()?;
    let u_f = mr.simulate(u)?;
    let mr_y = mr.simulate(y)?;
    let e_f = SampledSignal::new(
        y.values()
            .iter()
            .zip(mr_y.values())
            .map(|(a, b)| a - b)
            .collect(),
        y.ts(),
    )?;
    Ok((u_f, e_f))
}

/// The banded-causal regressor: column `k` is `e` delayed by `k` samples,
/// zero-padded at the top.
pub fn build_regressor(e: &SampledSignal, m: usize) -> Result<DMatrix<f64>> {
    let n = e.len();
    if m == 0 || m > n {
        return Err(Error::dim(format!(
            "FIR order must satisfy 1 <= m <= N, got m={m}, N={n}"
        )));
    }
    let vals = e.values();
    Ok(DMatrix::from_fn(n, m, |t, k| {
        if t >= k {
            vals[t - k]
        } else {
            0.0
        }
    }))
}

/// Integral regressor: entry `t` is `ts * sum_{s<=t} e(s)`.
pub fn build_integral_regressor(e: &SampledSignal) -> DVector<f64> {
    let mut acc = 0.0;
    DVector::from_iterator(
        e.len(),
        e.values().iter().map(|&v| {
            acc += v;
            acc * e.ts()
        }),
    )
}

/// Assembles the least-squares problem from the filtered pair.
///
/// With `gamma` fixed the term `gamma * E_int` is folded into the target;
/// a fixed negative gain is rejected (it could never be certified passive).
pub fn assemble_problem(
    u_f: &SampledSignal,
    e_f: &SampledSignal,
    m: usize,
    gamma: GammaMode,
) -> Result<RegressorSystem> {
    if u_f.len() != e_f.len() {
        return Err(Error::dim(format!(
            "u_f has {} samples, e_f has {}",
            u_f.len(),
            e_f.len()
        )));
    }
    u_f.same_ts(e_f)?;
    if let GammaMode::Fixed(v) = gamma {
        if v < 0.0 {
            return Err(Error::domain(format!(
                "fixed integral gain must be >= 0, got {v}"
            )));
        }
    }
    let e_mat = build_regressor(e_f, m)?;
    let e_int = build_integral_regressor(e_f);
    let mut target = DVector::from_column_slice(u_f.values());
    if let GammaMode::Fixed(v) = gamma {
        target -= &e_int * v;
    }
    Ok(RegressorSystem {
        e_mat,
        e_int,
        target,
        ts: u_f.ts(),
        m,
        gamma,
    })
}
