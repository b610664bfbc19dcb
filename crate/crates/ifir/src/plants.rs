//! Example systems: first-order fitting targets, the compliant two-cart
//! plant (linear and piecewise-spring variants), reference models, the PID
//! baseline, probe-data generation and closed-loop simulation.

use nalgebra::{DMatrix, DVector};

use crate::lti::{c2d_tustin, c2d_zoh, DiscreteTransferFunction, StateSpace, TimeDomain};
use crate::passivity::IFIRController;
use crate::signal::{filtered_step, linspace_frequencies, sine_probe};
use crate::{Error, Result, SampledSignal};

/// Spring characteristic of the two-cart coupling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Spring {
    Linear,
    /// Piecewise-linear force: slope `slope_small` up to `|delta| =
    /// threshold`, then `slope_large`, continuous at the breakpoint.
    Piecewise {
        threshold: f64,
        slope_small: f64,
        slope_large: f64,
    },
}

/// Two-cart plant parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoCartParams {
    pub m1: f64,
    pub m2: f64,
    pub k12: f64,
    pub c12: f64,
    pub c: f64,
    pub spring: Spring,
}

impl TwoCartParams {
    /// The values used throughout the worked examples: a 3 kg truck pulling
    /// a 0.5 kg load through a unit spring.
    pub fn nominal() -> Self {
        Self {
            m1: 3.0,
            m2: 0.5,
            k12: 1.0,
            c12: 1.05,
            c: 0.5,
            spring: Spring::Linear,
        }
    }

    /// Nominal parameters with the piecewise spring (slope 1 below a 0.5 m
    /// stretch, slope 2 beyond).
    pub fn nominal_piecewise() -> Self {
        Self {
            spring: Spring::Piecewise {
                threshold: 0.5,
                slope_small: 1.0,
                slope_large: 2.0,
            },
            ..Self::nominal()
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.m1 > 0.0 && self.m2 > 0.0 && self.c12 > 0.0 && self.c > 0.0) {
            return Err(Error::domain(
                "masses and damping must be strictly positive",
            ));
        }
        if let Spring::Piecewise { threshold, .. } = self.spring {
            if !(threshold > 0.0) {
                return Err(Error::domain("spring breakpoint must be > 0"));
            }
        }
        Ok(())
    }
}

/// Spring force at displacement `delta`.
pub fn spring_force(params: &TwoCartParams, delta: f64) -> f64 {
    match params.spring {
        Spring::Linear => params.k12 * delta,
        Spring::Piecewise {
            threshold,
            slope_small,
            slope_large,
        } => {
            let a = delta.abs();
            if a <= threshold {
                slope_small * delta
            } else {
                delta.signum() * (slope_small * threshold + slope_large * (a - threshold))
            }
        }
    }
}

/// Storage function `1/2 m1 v1^2 + 1/2 m2 v2^2 + spring potential`; the
/// supply rate `u*v1` dominates its derivative along trajectories.
pub fn storage_energy(params: &TwoCartParams, state: &[f64]) -> f64 {
    let (v1, v2, delta) = (state[0], state[1], state[2]);
    let potential = match params.spring {
        Spring::Linear => 0.5 * params.k12 * delta * delta,
        Spring::Piecewise {
            threshold,
            slope_small,
            slope_large,
        } => {
            let a = delta.abs();
            if a <= threshold {
                0.5 * slope_small * a * a
            } else {
                0.5 * slope_small * threshold * threshold
                    + slope_small * threshold * (a - threshold)
                    + 0.5 * slope_large * (a - threshold) * (a - threshold)
            }
        }
    };
    0.5 * params.m1 * v1 * v1 + 0.5 * params.m2 * v2 * v2 + potential
}

/// State derivative map `(state, input, d_state_out)`.
pub type DerivativeFn = Box<dyn Fn(&[f64], f64, &mut [f64]) + Send + Sync>;
/// Output map `state -> y`.
pub type OutputFn = Box<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// A nonlinear SISO plant given by a state derivative map and an output map.
pub struct NonlinearPlant {
    dim: usize,
    deriv: DerivativeFn,
    output: OutputFn,
}

impl std::fmt::Debug for NonlinearPlant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("NonlinearPlant")
            .field("dim", &self.dim)
            .finish()
    }
}

/// Fixed RK4 substeps per sample for nonlinear integration.
pub const RK4_SUBSTEPS: usize = 10;

impl NonlinearPlant {
    pub fn new(
        dim: usize,
        deriv: impl Fn(&[f64], f64, &mut [f64]) + Send + Sync + 'static,
        output: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            dim,
            deriv: Box::new(deriv),
            output: Box::new(output),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn output(&self, state: &[f64]) -> f64 {
        (self.output)(state)
    }

    /// Advances the state over one sampling interval with the input held
    /// (zero-order hold), using `RK4_SUBSTEPS` classical Runge-Kutta steps.
    pub fn hold_step(&self, state: &mut [f64], u: f64, ts: f64) {
        let h = ts / RK4_SUBSTEPS as f64;
        let n = self.dim;
        let mut k1 = vec![0.0; n];
        let mut k2 = vec![0.0; n];
        let mut k3 = vec![0.0; n];
        let mut k4 = vec![0.0; n];
        let mut tmp = vec![0.0; n];
        for _ in 0..RK4_SUBSTEPS {
            (self.deriv)(state, u, &mut k1);
            for i in 0..n {
                tmp[i] = state[i] + 0.5 * h * k1[i];
            }
            (self.deriv)(&tmp, u, &mut k2);
            for i in 0..n {
                tmp[i] = state[i] + 0.5 * h * k2[i];
            }
            (self.deriv)(&tmp, u, &mut k3);
            for i in 0..n {
                tmp[i] = state[i] + h * k3[i];
            }
            (self.deriv)(&tmp, u, &mut k4);
            for i in 0..n {
                state[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
        }
    }

    /// Open-loop response from rest; output sampled before each hold step.
    pub fn simulate(&self, input: &SampledSignal) -> Result<(SampledSignal, Vec<f64>)> {
        let mut state = vec![0.0; self.dim];
        let mut out = Vec::with_capacity(input.len());
        for &u in input.values() {
            out.push(self.output(&state));
            self.hold_step(&mut state, u, input.ts());
        }
        Ok((SampledSignal::new(out, input.ts())?, state))
    }
}

/// Two-cart model: linear spring gives a continuous state-space system,
/// piecewise spring gives a nonlinear plant. States are `(v1, v2, delta)`,
/// input the force on cart 1, output its velocity `v1` (the collocated
/// pair, which is what makes the plant passive).
#[derive(Debug)]
pub enum TwoCartModel {
    Linear(StateSpace),
    Nonlinear(NonlinearPlant),
}

pub fn two_cart(params: TwoCartParams) -> Result<TwoCartModel> {
    params.validate()?;
    match params.spring {
        Spring::Linear => {
            let TwoCartParams {
                m1,
                m2,
                k12,
                c12,
                c,
                ..
            } = params;
            let a = DMatrix::from_row_slice(
                3,
                3,
                &[
                    -(c12 + c) / m1,
                    c12 / m1,
                    -k12 / m1,
                    c12 / m2,
                    -(c12 + c) / m2,
                    k12 / m2,
                    1.0,
                    -1.0,
                    0.0,
                ],
            );
            let b = DVector::from_vec(vec![1.0 / m1, 0.0, 0.0]);
            let cvec = DVector::from_vec(vec![1.0, 0.0, 0.0]);
            Ok(TwoCartModel::Linear(StateSpace::new(
                a,
                b,
                cvec,
                0.0,
                TimeDomain::Continuous,
            )?))
        }
        Spring::Piecewise { .. } => {
            let p = params;
            let deriv = move |x: &[f64], u: f64, dx: &mut [f64]| {
                let (v1, v2, delta) = (x[0], x[1], x[2]);
                let f = spring_force(&p, delta);
                let coupling = p.c12 * (v1 - v2);
                dx[0] = (u - f - coupling - p.c * v1) / p.m1;
                dx[1] = (f + coupling - p.c * v2) / p.m2;
                dx[2] = v1 - v2;
            };
            Ok(TwoCartModel::Nonlinear(NonlinearPlant::new(
                3,
                deriv,
                |x| x[0],
            )))
        }
    }
}

/// Fitting target `1/(0.5 s + 1)^q` as a chain of first-order sections.
pub fn target_filter(q: usize) -> Result<StateSpace> {
    if !(1..=3).contains(&q) {
        return Err(Error::domain(format!(
            "target order must be in {{1, 2, 3}}, got {q}"
        )));
    }
    let mut a = DMatrix::<f64>::zeros(q, q);
    for i in 0..q {
        a[(i, i)] = -2.0;
        if i > 0 {
            a[(i, i - 1)] = 2.0;
        }
    }
    let mut b = DVector::<f64>::zeros(q);
    b[0] = 2.0;
    let mut c = DVector::<f64>::zeros(q);
    c[q - 1] = 1.0;
    StateSpace::new(a, b, c, 0.0, TimeDomain::Continuous)
}

/// Reference model `(1 + 0.1 s)/(1 + 2 zeta T s + T^2 s^2)` in controllable
/// canonical form; unit DC gain for every `(T, zeta)`.
pub fn reference_model(t_const: f64, zeta: f64) -> Result<StateSpace> {
    if !(t_const > 0.0) || !(zeta > 0.0) {
        return Err(Error::domain(format!(
            "reference model needs T > 0 and zeta > 0, got T={t_const}, zeta={zeta}"
        )));
    }
    let t2 = t_const * t_const;
    let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0 / t2, -2.0 * zeta / t_const]);
    let b = DVector::from_vec(vec![0.0, 1.0]);
    let c = DVector::from_vec(vec![1.0 / t2, 0.1 / t2]);
    StateSpace::new(a, b, c, 0.0, TimeDomain::Continuous)
}

/// PID gains `[Kp, Kd, Ki]` tuned against the slower reference model.
pub const PID_GAINS_MR1: [f64; 3] = [0.8051, 4.4090, 0.0068];
/// PID gains `[Kp, Kd, Ki]` tuned against the aggressive reference model.
pub const PID_GAINS_MR2: [f64; 3] = [2.6142, 10.2330, 0.0232];

/// PID with the gain-to-term pairing
/// `C(z) = Kp + Kd * Ts/(1 - z^-1) + Ki * (z-1)/(z Ts)`.
///
/// Note the unusual pairing: `Kd` multiplies the integrator and `Ki` the
/// differencer. [`pid_controller_role_swapped`] gives the conventional
/// assignment with the same gain values.
pub fn pid_controller(kp: f64, kd: f64, ki: f64, ts: f64) -> Result<DiscreteTransferFunction> {
    if kp < 0.0 || kd < 0.0 || ki < 0.0 {
        return Err(Error::domain(
            "PID gains must be non-negative for passivity",
        ));
    }
    if !(ts > 0.0) {
        return Err(Error::domain(format!("ts must be > 0, got {ts}")));
    }
    let num = vec![kp + kd * ts + ki / ts, -(kp + 2.0 * ki / ts), ki / ts];
    DiscreteTransferFunction::new(num, vec![1.0, -1.0], ts)
}

/// PID with `Ki` on the integrator and `Kd` on the differencer.
pub fn pid_controller_role_swapped(
    kp: f64,
    kd: f64,
    ki: f64,
    ts: f64,
) -> Result<DiscreteTransferFunction> {
    pid_controller(kp, ki, kd, ts)
}

/// Feedback controller accepted by the closed-loop simulator.
#[derive(Debug, Clone)]
pub enum LoopController {
    Ifir(IFIRController),
    Tf(DiscreteTransferFunction),
}

/// Plant accepted by the closed-loop simulator.
#[derive(Debug)]
pub enum LoopPlant {
    Discrete(StateSpace),
    Tf(DiscreteTransferFunction),
    Nonlinear(NonlinearPlant),
}

enum CtrlState {
    Ifir {
        integral: f64,
        hist: Vec<f64>,
        pos: usize,
    },
    Tf {
        w: Vec<f64>,
    },
}

struct ControllerSim<'a> {
    ctrl: &'a LoopController,
    state: CtrlState,
}

impl<'a> ControllerSim<'a> {
    fn new(ctrl: &'a LoopController) -> Self {
        let state = match ctrl {
            LoopController::Ifir(c) => CtrlState::Ifir {
                integral: 0.0,
                hist: vec![0.0; c.order()],
                pos: 0,
            },
            LoopController::Tf(tf) => {
                let n = tf.num().len().max(tf.den().len()) - 1;
                CtrlState::Tf {
                    w: vec![0.0; n + 1],
                }
            }
        };
        Self { ctrl, state }
    }

    fn feedthrough(&self) -> f64 {
        match self.ctrl {
            LoopController::Ifir(c) => c.feedthrough(),
            LoopController::Tf(tf) => tf.feedthrough(),
        }
    }

    /// Output for the current error, advancing the state.
    fn step(&mut self, e: f64) -> f64 {
        match (&mut self.state, self.ctrl) {
            (
                CtrlState::Ifir {
                    integral,
                    hist,
                    pos,
                },
                LoopController::Ifir(c),
            ) => {
                *integral += c.gamma() * c.ts() * e;
                hist[*pos] = e;
                let m = c.order();
                let mut fir = 0.0;
                for (k, &gk) in c.g().iter().enumerate() {
                    let idx = (*pos + m - k) % m;
                    fir += gk * hist[idx];
                }
                *pos = (*pos + 1) % m;
                *integral + fir
            }
            (CtrlState::Tf { w }, LoopController::Tf(tf)) => {
                // direct form II transposed
                let num = tf.num();
                let den = tf.den();
                let u = (num[0] * e + w[0]) / den[0];
                let n = w.len();
                for i in 0..n - 1 {
                    let b = num.get(i + 1).copied().unwrap_or(0.0);
                    let a = den.get(i + 1).copied().unwrap_or(0.0);
                    w[i] = b * e - a * u + w[i + 1];
                }
                w[n - 1] = 0.0;
                u
            }
            _ => unreachable!(),
        }
    }

    /// Output the controller would produce for a zero current error, without
    /// advancing the state; valid as the actual output when the controller
    /// has no feedthrough.
    fn peek_zero_input(&self) -> f64 {
        match (&self.state, self.ctrl) {
            (
                CtrlState::Ifir {
                    integral,
                    hist,
                    pos,
                },
                LoopController::Ifir(c),
            ) => {
                let m = c.order();
                let mut fir = 0.0;
                for (k, &gk) in c.g().iter().enumerate() {
                    if k == 0 {
                        continue;
                    }
                    let idx = (*pos + m - k) % m;
                    fir += gk * hist[idx];
                }
                *integral + fir
            }
            (CtrlState::Tf { w }, LoopController::Tf(tf)) => w[0] / tf.den()[0],
            _ => unreachable!(),
        }
    }
}

/// Simulates the unity-feedback loop `u = C(r - y)` from rest.
///
/// The plant output at each sample is computed from the plant state before
/// the new input is applied; a plant with direct feedthrough is only
/// accepted when the controller has none (otherwise the sample update is an
/// algebraic loop and is rejected). Nonlinear plants integrate between
/// samples with held input.
pub fn closed_loop_sim(
    plant: &LoopPlant,
    controller: &LoopController,
    r: &SampledSignal,
) -> Result<(SampledSignal, SampledSignal)> {
    let ts = r.ts();
    match controller {
        LoopController::Ifir(c) => crate::signal::check_ts_match(c.ts(), ts)?,
        LoopController::Tf(tf) => crate::signal::check_ts_match(tf.ts(), ts)?,
    }
    let mut ctrl = ControllerSim::new(controller);
    let mut y_out = Vec::with_capacity(r.len());
    let mut u_out = Vec::with_capacity(r.len());

    match plant {
        LoopPlant::Discrete(ss) => {
            let ss_ts = ss.ts().ok_or_else(|| {
                Error::domain("closed_loop_sim needs a discrete plant; discretize first")
            })?;
            crate::signal::check_ts_match(ss_ts, ts)?;
            let has_plant_feedthrough = ss.d() != 0.0;
            if has_plant_feedthrough && ctrl.feedthrough() != 0.0 {
                return Err(Error::AlgebraicLoop(
                    "both plant and controller have direct feedthrough".into(),
                ));
            }
            let mut x = DVector::<f64>::zeros(ss.order());
            for &rt in r.values() {
                let (y, u) = if !has_plant_feedthrough {
                    let y = ss.c().dot(&x);
                    let u = ctrl.step(rt - y);
                    (y, u)
                } else {
                    let u = ctrl.peek_zero_input();
                    let y = ss.c().dot(&x) + ss.d() * u;
                    ctrl.step(rt - y);
                    (y, u)
                };
                y_out.push(y);
                u_out.push(u);
                x = ss.a() * &x + ss.b() * u;
            }
        }
        LoopPlant::Tf(tf) => {
            crate::signal::check_ts_match(tf.ts(), ts)?;
            let has_plant_feedthrough = tf.feedthrough() != 0.0;
            if has_plant_feedthrough && ctrl.feedthrough() != 0.0 {
                return Err(Error::AlgebraicLoop(
                    "both plant and controller have direct feedthrough".into(),
                ));
            }
            // direct form II transposed state of the plant
            let num = tf.num();
            let den = tf.den();
            let nw = num.len().max(den.len());
            let mut w = vec![0.0f64; nw];
            for &rt in r.values() {
                let (y, u) = if !has_plant_feedthrough {
                    let y = w[0] / den[0];
                    let u = ctrl.step(rt - y);
                    (y, u)
                } else {
                    let u = ctrl.peek_zero_input();
                    let y = (num[0] * u + w[0]) / den[0];
                    ctrl.step(rt - y);
                    (y, u)
                };
                y_out.push(y);
                u_out.push(u);
                for i in 0..nw - 1 {
                    let b = num.get(i + 1).copied().unwrap_or(0.0);
                    let a = den.get(i + 1).copied().unwrap_or(0.0);
                    w[i] = b * u - a * y + w[i + 1];
                }
                w[nw - 1] = 0.0;
            }
        }
        LoopPlant::Nonlinear(nl) => {
            let mut x = vec![0.0; nl.dim()];
            for &rt in r.values() {
                let y = nl.output(&x);
                let u = ctrl.step(rt - y);
                y_out.push(y);
                u_out.push(u);
                nl.hold_step(&mut x, u, ts);
            }
        }
    }
    Ok((
        SampledSignal::new(y_out, ts)?,
        SampledSignal::new(u_out, ts)?,
    ))
}

/// The multisine open-loop probe: 10 sinusoids spanning `[0.5, 10]` rad/s,
/// 2001 samples at `ts`.
pub fn nominal_probe(ts: f64, n: usize) -> Result<SampledSignal> {
    sine_probe(&linspace_frequencies(0.5, 10.0, 10), n, ts)
}

/// Open-loop probe data `(u, y)` from a two-cart model (ZOH-discretized
/// when linear, held-input RK4 when nonlinear).
pub fn two_cart_probe_data(
    model: &TwoCartModel,
    ts: f64,
    n: usize,
) -> Result<(SampledSignal, SampledSignal)> {
    let u = nominal_probe(ts, n)?;
    let y = match model {
        TwoCartModel::Linear(ss) => c2d_zoh(ss, ts)?.simulate(&u)?,
        TwoCartModel::Nonlinear(nl) => nl.simulate(&u)?.0,
    };
    Ok((u, y))
}

/// Fitting data `(e, u)` for the order-`q` target: `e` is the sampled
/// filtered step `1 - exp(-t/0.2)` and `u = C_q e` through the bilinear
/// discretization of the target (bilinear rather than ZOH so that the
/// passive target stays positive real after sampling).
pub fn target_fit_data(q: usize, n: usize, ts: f64) -> Result<(SampledSignal, SampledSignal)> {
    let e = filtered_step(0.2, n, ts)?;
    let target = c2d_tustin(&target_filter(q)?, ts)?;
    let u = target.simulate(&e)?;
    Ok((e, u))
}
