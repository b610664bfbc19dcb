//! Passivity constraint sets for the FIR part of an iFIR controller, and
//! verification of designed controllers.
//!
//! Three interchangeable formulations produce affine constraints in the
//! unknowns `(g, gamma, X)`:
//!
//! * [`kyp_constraints`] — the discrete positive-real LMI over an auxiliary
//!   symmetric matrix `X`, exact but with `O(m^2)` extra unknowns;
//! * [`finite_toeplitz_constraints`] — positive semidefiniteness of a finite
//!   section of the banded Toeplitz operator plus coefficient decay bounds;
//! * [`posreal_constraints`] — sampled frequency-domain inequalities
//!   `2 sum_k g_k cos(k theta_q) >= eps` whose spacing bound
//!   [`epsilon_bound`] makes the finite sampling sound.
//!
//! All variable indices refer to the canonical layout
//! `[g_0..g_{m-1}, gamma, svec(X)...]`; problem assembly drops or folds
//! coordinates that are not unknowns of a particular design.

use nalgebra::DMatrix;

use crate::lti::{backward_euler_integrator, poly_add, poly_mul, DiscreteTransferFunction};
use crate::solver::{AffinePsdBlock, LinearInequality};
use crate::{Error, Result, SampledSignal};

/// Margin threshold below which a controller is not certified; absorbs
/// first-order solver residuals.
pub const MARGIN_TOL: f64 = 1e-6;

/// Shift used to realize the strict inequality `X > 0` as `X >= delta I`.
pub const KYP_X_SHIFT: f64 = 1e-9;

/// An iFIR controller: parallel backward-Euler integrator and FIR filter.
#[derive(Debug, Clone, PartialEq)]
pub struct IFIRController {
    gamma: f64,
    g: Vec<f64>,
    ts: f64,
}

impl IFIRController {
    pub fn new(gamma: f64, g: Vec<f64>, ts: f64) -> Result<Self> {
        if !(ts > 0.0) {
            return Err(Error::domain(format!("ts must be > 0, got {ts}")));
        }
        if g.is_empty() {
            return Err(Error::domain("FIR part must have at least one coefficient"));
        }
        if !gamma.is_finite() || g.iter().any(|v| !v.is_finite()) {
            return Err(Error::numeric("controller parameters must be finite"));
        }
        Ok(Self { gamma, g, ts })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn g(&self) -> &[f64] {
        &self.g
    }

    pub fn order(&self) -> usize {
        self.g.len()
    }

    pub fn ts(&self) -> f64 {
        self.ts
    }

    /// Direct feedthrough `gamma*ts + g_0`.
    pub fn feedthrough(&self) -> f64 {
        self.gamma * self.ts + self.g[0]
    }

    /// Controller response to an error signal from zero initial state.
    pub fn response(&self, e: &SampledSignal) -> Result<SampledSignal> {
        crate::signal::check_ts_match(self.ts, e.ts())?;
        let vals = e.values();
        let mut integral = 0.0;
        let mut out = Vec::with_capacity(vals.len());
        for t in 0..vals.len() {
            integral += self.gamma * self.ts * vals[t];
            let mut fir = 0.0;
            for (k, &gk) in self.g.iter().enumerate() {
                if t >= k {
                    fir += gk * vals[t - k];
                }
            }
            out.push(integral + fir);
        }
        SampledSignal::new(out, self.ts)
    }

    /// Transfer function `gamma*ts/(1 - z^-1) + sum_k g_k z^-k`.
    pub fn to_tf(&self) -> Result<DiscreteTransferFunction> {
        let int = backward_euler_integrator(self.gamma, self.ts)?;
        let fir_num = self.g.clone();
        let num = poly_add(int.num(), &poly_mul(&fir_num, int.den()));
        DiscreteTransferFunction::new(num, int.den().to_vec(), self.ts)
    }

    /// Certification check: `gamma >= 0` and dense-grid margin above the
    /// tolerance.
    pub fn is_certified(&self, grid_points: usize) -> Result<bool> {
        Ok(self.gamma >= 0.0 && passivity_margin(&self.g, grid_points)? >= -MARGIN_TOL)
    }
}

/// Coefficient decay bounds attached to a constraint set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Decay {
    None,
    Geometric { rho0: f64, rho: f64 },
}

/// Which formulation generated a constraint set.
#[derive(Debug, Clone, PartialEq)]
pub enum ConstraintMethod {
    Kyp,
    Toeplitz {
        n: usize,
        epsilon: f64,
    },
    Posreal {
        samples: usize,
        epsilon: f64,
        auto_epsilon: bool,
    },
}

/// Method-tagged bundle of linear inequalities and affine-PSD blocks over
/// the canonical unknowns `[g, gamma, svec(X)]`.
#[derive(Debug, Clone)]
pub struct PassivityConstraintSet {
    pub method: ConstraintMethod,
    pub m: usize,
    pub linear_ineqs: Vec<LinearInequality>,
    pub psd_blocks: Vec<AffinePsdBlock>,
    pub decay: Decay,
}

impl PassivityConstraintSet {
    /// Index of `gamma` in the canonical layout.
    pub fn gamma_index(&self) -> usize {
        self.m
    }

    /// Number of auxiliary `svec(X)` unknowns (zero unless KYP).
    pub fn x_dim(&self) -> usize {
        match self.method {
            ConstraintMethod::Kyp => {
                let s = self.m - 1;
                s * (s + 1) / 2
            }
            _ => 0,
        }
    }

    /// Total canonical dimension `m + 1 + x_dim`.
    pub fn canonical_dim(&self) -> usize {
        self.m + 1 + self.x_dim()
    }
}

/// Index of `X[a, b]` (`a <= b`, `X` of side `s`) within `svec(X)`,
/// counting the upper triangle column by column.
pub(crate) fn svec_index(a: usize, b: usize) -> usize {
    debug_assert!(a <= b);
    b * (b + 1) / 2 + a
}

/// Lower-triangular banded Toeplitz matrix of order `n >= m`: entry
/// `(i, j) = g_{i-j}` when `0 <= i-j <= m-1`, else zero.
pub fn toeplitz_matrix(g: &[f64], n: usize) -> Result<DMatrix<f64>> {
    let m = g.len();
    if m == 0 {
        return Err(Error::domain("coefficient list must not be empty"));
    }
    if n < m {
        return Err(Error::dim(format!("Toeplitz order n={n} must be >= m={m}")));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| {
        if i >= j && i - j < m {
            g[i - j]
        } else {
            0.0
        }
    }))
}

/// Minimal eigenvalue of `phi_n(g) + phi_n(g)^T`; diagnostic for the
/// convergence of the finite sections toward the generating-function
/// infimum.
pub fn toeplitz_min_eig(g: &[f64], n: usize) -> Result<f64> {
    let phi = toeplitz_matrix(g, n)?;
    let sym = &phi + phi.transpose();
    let eigs = sym.symmetric_eigen().eigenvalues;
    Ok(eigs.iter().copied().fold(f64::INFINITY, f64::min))
}

/// Dense-grid passivity margin:
/// `min_i 2 sum_k g_k cos(k theta_i)` over `theta_i = i*pi/(grid-1)`.
pub fn passivity_margin(g: &[f64], grid_points: usize) -> Result<f64> {
    if g.is_empty() {
        return Err(Error::domain("coefficient list must not be empty"));
    }
    if grid_points < 1000 {
        return Err(Error::domain(format!(
            "grid must have >= 1000 points, got {grid_points}"
        )));
    }
    let mut min = f64::INFINITY;
    for i in 0..grid_points {
        let theta = std::f64::consts::PI * i as f64 / (grid_points - 1) as f64;
        let f = real_part_doubled(g, theta);
        if f < min {
            min = f;
        }
    }
    Ok(min)
}

/// `G(e^{j theta}) + G(e^{-j theta}) = 2 sum_k g_k cos(k theta)`, via the
/// Chebyshev recurrence for `cos(k theta)`.
pub(crate) fn real_part_doubled(g: &[f64], theta: f64) -> f64 {
    let c = theta.cos();
    let mut ck_prev = 1.0; // cos(0)
    let mut ck = c; // cos(theta)
    let mut acc = g[0];
    if g.len() > 1 {
        acc += g[1] * ck;
    }
    for &gk in g.iter().skip(2) {
        let next = 2.0 * c * ck - ck_prev;
        ck_prev = ck;
        ck = next;
        acc += gk * ck;
    }
    2.0 * acc
}

/// Checks the cosine-sum Lipschitz inequality
/// `|f(theta+delta) - f(theta)| <= (m-1)|delta| sum_k |g_k|` with
/// `f(theta) = sum_k g_k cos(k theta)`.
pub fn lipschitz_bound_check(g: &[f64], theta: f64, delta: f64) -> bool {
    let f = |t: f64| {
        g.iter()
            .enumerate()
            .map(|(k, &gk)| gk * (k as f64 * t).cos())
            .sum::<f64>()
    };
    let lhs = (f(theta + delta) - f(theta)).abs();
    let m = g.len();
    let rhs = (m as f64 - 1.0) * delta.abs() * g.iter().map(|v| v.abs()).sum::<f64>();
    lhs <= rhs + 1e-12
}

/// Spacing bound `pi * rho0 * (1-rho^m)/(1-rho) * (m-1)/(2M)`; the
/// geometric factor is evaluated as its limit `m` at `rho = 1`.
pub fn epsilon_bound(rho0: f64, rho: f64, m: usize, samples: usize) -> Result<f64> {
    check_decay_params(rho0, rho)?;
    if samples < 2 {
        return Err(Error::domain(format!(
            "sample count must be >= 2, got {samples}"
        )));
    }
    if m == 0 {
        return Err(Error::domain("m must be >= 1"));
    }
    let geo = if rho == 1.0 {
        m as f64
    } else {
        (1.0 - rho.powi(m as i32)) / (1.0 - rho)
    };
    Ok(std::f64::consts::PI * rho0 * geo * (m as f64 - 1.0) / (2.0 * samples as f64))
}

fn check_decay_params(rho0: f64, rho: f64) -> Result<()> {
    if !(rho0 > 0.0) {
        return Err(Error::domain(format!("rho0 must be > 0, got {rho0}")));
    }
    if !(rho > 0.0 && rho <= 1.0) {
        return Err(Error::domain(format!("rho must be in (0, 1], got {rho}")));
    }
    Ok(())
}

fn gamma_nonneg_row(m: usize) -> LinearInequality {
    LinearInequality {
        coeffs: vec![(m, 1.0)],
        bound: 0.0,
    }
}

/// The `2m` decay rows `|g_0| <= rho0`, `|g_k| <= rho0 rho^k`.
fn decay_rows(m: usize, rho0: f64, rho: f64) -> Vec<LinearInequality> {
    let mut rows = Vec::with_capacity(2 * m);
    for k in 0..m {
        let bound = rho0 * rho.powi(k as i32);
        rows.push(LinearInequality {
            coeffs: vec![(k, 1.0)],
            bound: -bound,
        });
        rows.push(LinearInequality {
            coeffs: vec![(k, -1.0)],
            bound: -bound,
        });
    }
    rows
}

/// The state-space realization underlying the KYP constraint: the
/// upper-shift chain `A_c` with `B_c = e_{m-1}`, readout `C_c =
/// [g_{m-1} ... g_1]` and feedthrough `D_c = g_0`. `C_c` and `D_c` are
/// symbolic in the unknown coefficients; `X` is the symmetric unknown of
/// the matrix inequality.
#[derive(Debug, Clone)]
pub struct KypRealization {
    m: usize,
}

impl KypRealization {
    pub fn new(m: usize) -> Result<Self> {
        if m < 2 {
            return Err(Error::domain(
                "KYP realization needs m >= 2; use the scalar constraint g_0 >= 0 for m = 1",
            ));
        }
        Ok(Self { m })
    }

    /// Side of the state matrix (and of `X`).
    pub fn state_dim(&self) -> usize {
        self.m - 1
    }

    /// Nilpotent upper-shift state matrix.
    pub fn a_c(&self) -> DMatrix<f64> {
        let s = self.state_dim();
        DMatrix::from_fn(s, s, |i, j| if j == i + 1 { 1.0 } else { 0.0 })
    }

    /// Unit last-entry input vector.
    pub fn b_c(&self) -> DMatrix<f64> {
        let s = self.state_dim();
        DMatrix::from_fn(s, 1, |i, _| if i == s - 1 { 1.0 } else { 0.0 })
    }

    /// Readout row for concrete coefficients.
    pub fn c_c(&self, g: &[f64]) -> DMatrix<f64> {
        let s = self.state_dim();
        DMatrix::from_fn(1, s, |_, j| g[self.m - 1 - j])
    }

    pub fn d_c(&self, g: &[f64]) -> f64 {
        g[0]
    }

    /// Dense evaluation of the positive-real matrix inequality
    /// `[[X - Ac' X Ac, Cc' - Ac' X Bc], [sym, Dc + Dc' - Bc' X Bc]]` at
    /// concrete `(g, X)`. Reference arithmetic for the affine constraint
    /// construction.
    pub fn lmi_block(&self, g: &[f64], x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let s = self.state_dim();
        if g.len() != self.m {
            return Err(Error::dim(format!("expected {} coefficients, got {}", self.m, g.len())));
        }
        if x.nrows() != s || x.ncols() != s {
            return Err(Error::dim(format!("X must be {s}x{s}")));
        }
        let a = self.a_c();
        let b = self.b_c();
        let c = self.c_c(g);
        let top_left = x - a.transpose() * x * &a;
        let top_right = c.transpose() - a.transpose() * x * &b;
        let corner = 2.0 * self.d_c(g) - (b.transpose() * x * &b)[(0, 0)];
        let mut block = DMatrix::<f64>::zeros(self.m, self.m);
        block.view_mut((0, 0), (s, s)).copy_from(&top_left);
        block.view_mut((0, s), (s, 1)).copy_from(&top_right);
        block.view_mut((s, 0), (1, s)).copy_from(&top_right.transpose());
        block[(s, s)] = corner;
        Ok(block)
    }
}

/// KYP-lemma constraint set for FIR order `m >= 2`.
///
/// Emits `gamma >= 0`, `X >= delta I`, the positive-real LMI block of size
/// `m` (affine in `g` and `X`), and `2 g_0 >= 0`. The block's affine terms
/// agree entrywise with [`KypRealization::lmi_block`].
pub fn kyp_constraints(m: usize) -> Result<PassivityConstraintSet> {
    let realization = KypRealization::new(m)?;
    let s = realization.state_dim();
    let x_var = |a: usize, b: usize| m + 1 + svec_index(a, b);

    // X >= delta I
    let mut x_block = AffinePsdBlock {
        size: s,
        f0: Vec::new(),
        terms: Vec::new(),
    };
    for i in 0..s {
        x_block.f0.push((i, i, -KYP_X_SHIFT));
    }
    for b in 0..s {
        for a in 0..=b {
            x_block.terms.push((x_var(a, b), a, b, 1.0));
        }
    }

    // [[X - Ac' X Ac, Cc' - Ac' X Bc], [*, 2 g_0 - Bc' X Bc]] >= 0
    let mut lmi = AffinePsdBlock {
        size: m,
        f0: Vec::new(),
        terms: Vec::new(),
    };
    for j in 0..s {
        for i in 0..=j {
            lmi.terms.push((x_var(i, j), i, j, 1.0));
            if i >= 1 && j >= 1 {
                lmi.terms.push((x_var(i - 1, j - 1), i, j, -1.0));
            }
        }
    }
    for i in 0..s {
        // column entry (i, s): g_{m-1-i} - (Ac' X Bc)_i
        lmi.terms.push((m - 1 - i, i, s, 1.0));
        if i >= 1 {
            lmi.terms.push((x_var(i - 1, s - 1), i, s, -1.0));
        }
    }
    lmi.terms.push((0, s, s, 2.0));
    lmi.terms.push((x_var(s - 1, s - 1), s, s, -1.0));

    let linear_ineqs = vec![
        gamma_nonneg_row(m),
        LinearInequality {
            coeffs: vec![(0, 2.0)],
            bound: 0.0,
        },
    ];

    Ok(PassivityConstraintSet {
        method: ConstraintMethod::Kyp,
        m,
        linear_ineqs,
        psd_blocks: vec![x_block, lmi],
        decay: Decay::None,
    })
}

/// Finite-section Toeplitz constraint set:
/// `gamma >= 0`, the `2m` decay rows, and
/// `phi_n(g) + phi_n(g)^T >= eps I_n`.
pub fn finite_toeplitz_constraints(
    m: usize,
    n: usize,
    epsilon: f64,
    rho0: f64,
    rho: f64,
) -> Result<PassivityConstraintSet> {
    if m == 0 {
        return Err(Error::domain("m must be >= 1"));
    }
    if n < m {
        return Err(Error::dim(format!("Toeplitz order n={n} must be >= m={m}")));
    }
    if !(epsilon > 0.0) {
        return Err(Error::domain(format!("epsilon must be > 0, got {epsilon}")));
    }
    check_decay_params(rho0, rho)?;

    let mut block = AffinePsdBlock {
        size: n,
        f0: Vec::new(),
        terms: Vec::new(),
    };
    for i in 0..n {
        block.f0.push((i, i, -epsilon));
        block.terms.push((0, i, i, 2.0));
    }
    for k in 1..m {
        for i in 0..n - k {
            block.terms.push((k, i, i + k, 1.0));
        }
    }

    let mut linear_ineqs = vec![gamma_nonneg_row(m)];
    linear_ineqs.extend(decay_rows(m, rho0, rho));

    Ok(PassivityConstraintSet {
        method: ConstraintMethod::Toeplitz { n, epsilon },
        m,
        linear_ineqs,
        psd_blocks: vec![block],
        decay: Decay::Geometric { rho0, rho },
    })
}

/// Sampled positive-realness constraint set:
/// `gamma >= 0`, the `2m` decay rows, and the `M+1` rows
/// `2 sum_k g_k cos(k pi q / M) >= eps` for `q = 0..M`. `eps` defaults to
/// [`epsilon_bound`] and may be overridden (the heuristic-search variant).
pub fn posreal_constraints(
    m: usize,
    samples: usize,
    rho0: f64,
    rho: f64,
    epsilon_override: Option<f64>,
) -> Result<PassivityConstraintSet> {
    if m == 0 {
        return Err(Error::domain("m must be >= 1"));
    }
    if samples < 2 {
        return Err(Error::domain(format!(
            "sample count must be >= 2, got {samples}"
        )));
    }
    check_decay_params(rho0, rho)?;
    let auto = epsilon_override.is_none();
    let epsilon = match epsilon_override {
        Some(e) if e < 0.0 => {
            return Err(Error::domain(format!(
                "epsilon override must be >= 0, got {e}"
            )));
        }
        Some(e) => e,
        None => epsilon_bound(rho0, rho, m, samples)?,
    };

    let mut linear_ineqs = vec![gamma_nonneg_row(m)];
    linear_ineqs.extend(decay_rows(m, rho0, rho));
    for q in 0..=samples {
        let theta = std::f64::consts::PI * q as f64 / samples as f64;
        let coeffs = (0..m)
            .map(|k| (k, 2.0 * (k as f64 * theta).cos()))
            .collect();
        linear_ineqs.push(LinearInequality {
            coeffs,
            bound: epsilon,
        });
    }

    Ok(PassivityConstraintSet {
        method: ConstraintMethod::Posreal {
            samples,
            epsilon,
            auto_epsilon: auto,
        },
        m,
        linear_ineqs,
        psd_blocks: Vec::new(),
        decay: Decay::Geometric { rho0, rho },
    })
}

/// Scalar constraint set `g_0 >= 0`, `gamma >= 0` for the degenerate order
/// `m = 1` where the KYP realization has no state.
pub fn scalar_constraints() -> PassivityConstraintSet {
    PassivityConstraintSet {
        method: ConstraintMethod::Posreal {
            samples: 2,
            epsilon: 0.0,
            auto_epsilon: true,
        },
        m: 1,
        linear_ineqs: vec![
            gamma_nonneg_row(1),
            LinearInequality {
                coeffs: vec![(0, 2.0)],
                bound: 0.0,
            },
        ],
        psd_blocks: Vec::new(),
        decay: Decay::None,
    }
}
