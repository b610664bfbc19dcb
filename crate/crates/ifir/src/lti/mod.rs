//! Discrete/continuous LTI state-space and transfer-function machinery:
//! zero-order-hold and bilinear discretization, simulation from rest,
//! frequency responses, and the closed-loop H2 matching diagnostic.

mod expm;

pub use expm::expm;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::signal::check_ts_match;
use crate::{Error, Result, SampledSignal};

/// Continuous time or discrete time with a sampling period.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimeDomain {
    Continuous,
    Discrete { ts: f64 },
}

/// Single-input single-output state-space system.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpace {
    a: DMatrix<f64>,
    b: DVector<f64>,
    c: DVector<f64>, // row vector stored as a column
    d: f64,
    time_domain: TimeDomain,
}

impl StateSpace {
    pub fn new(
        a: DMatrix<f64>,
        b: DVector<f64>,
        c: DVector<f64>,
        d: f64,
        time_domain: TimeDomain,
    ) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::dim(format!(
                "A must be square, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        if b.len() != n || c.len() != n {
            return Err(Error::dim(format!(
                "B and C must have length {n}, got {} and {}",
                b.len(),
                c.len()
            )));
        }
        if let TimeDomain::Discrete { ts } = time_domain {
            if !(ts > 0.0) {
                return Err(Error::domain(format!(
                    "discrete system needs ts > 0, got {ts}"
                )));
            }
        }
        let finite = a.iter().all(|v| v.is_finite())
            && b.iter().all(|v| v.is_finite())
            && c.iter().all(|v| v.is_finite())
            && d.is_finite();
        if !finite {
            return Err(Error::numeric(
                "state-space matrices contain non-finite entries",
            ));
        }
        Ok(Self {
            a,
            b,
            c,
            d,
            time_domain,
        })
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DVector<f64> {
        &self.b
    }

    pub fn c(&self) -> &DVector<f64> {
        &self.c
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    pub fn order(&self) -> usize {
        self.a.nrows()
    }

    pub fn time_domain(&self) -> TimeDomain {
        self.time_domain
    }

    pub fn is_continuous(&self) -> bool {
        matches!(self.time_domain, TimeDomain::Continuous)
    }

    pub fn ts(&self) -> Option<f64> {
        match self.time_domain {
            TimeDomain::Discrete { ts } => Some(ts),
            TimeDomain::Continuous => None,
        }
    }

    /// Simulates a discrete system from zero initial state.
    ///
    /// `y(t) = C x(t) + D u(t)`, `x(t+1) = A x(t) + B u(t)`; output length
    /// equals input length. Sampling periods must agree to 1e-12 relative.
    pub fn simulate(&self, input: &SampledSignal) -> Result<SampledSignal> {
        let ts = self.ts().ok_or_else(|| {
            Error::domain("simulate requires a discrete system; discretize first")
        })?;
        check_ts_match(ts, input.ts())?;
        let n = self.order();
        let mut x = DVector::<f64>::zeros(n);
        let mut out = Vec::with_capacity(input.len());
        for &u in input.values() {
            let y = self.c.dot(&x) + self.d * u;
            out.push(y);
            x = &self.a * &x + &self.b * u;
        }
        SampledSignal::new(out, ts)
    }

    /// Transfer function of a discrete system via the Faddeev–LeVerrier
    /// resolvent recursion; `den[0] = 1`.
    pub fn to_tf(&self) -> Result<DiscreteTransferFunction> {
        let ts = self
            .ts()
            .ok_or_else(|| Error::domain("to_tf requires a discrete system"))?;
        let n = self.order();
        let id = DMatrix::<f64>::identity(n, n);
        // den(z) = z^n + a1 z^(n-1) + ... + an, num from C adj(zI-A) B + D den.
        let mut den = vec![1.0];
        let mut num = Vec::with_capacity(n);
        let mut r = id.clone();
        for k in 1..=n {
            num.push((self.c.transpose() * &r * &self.b)[(0, 0)]);
            let m = &self.a * &r;
            let ak = -m.trace() / k as f64;
            den.push(ak);
            r = m + &id * ak;
        }
        // Convert from powers of z to powers of z^-1 and add the feedthrough.
        let mut num_zinv = vec![self.d];
        for k in 0..n {
            num_zinv.push(num[k] + self.d * den[k + 1]);
        }
        DiscreteTransferFunction::new(num_zinv, den, ts)
    }
}

/// Exact zero-order-hold discretization via the matrix exponential of the
/// standard augmented block `[[A, B], [0, 0]] * ts`; `C`, `D` unchanged.
pub fn c2d_zoh(sys: &StateSpace, ts: f64) -> Result<StateSpace> {
    if !sys.is_continuous() {
        return Err(Error::domain("c2d_zoh expects a continuous-time system"));
    }
    if !(ts > 0.0) {
        return Err(Error::domain(format!("ts must be > 0, got {ts}")));
    }
    let n = sys.order();
    let mut aug = DMatrix::<f64>::zeros(n + 1, n + 1);
    aug.view_mut((0, 0), (n, n)).copy_from(&(&sys.a * ts));
    aug.view_mut((0, n), (n, 1)).copy_from(&(&sys.b * ts));
    let e = expm(&aug)?;
    let a_d = e.view((0, 0), (n, n)).into_owned();
    let b_d = DVector::from_iterator(n, e.view((0, n), (n, 1)).iter().copied());
    StateSpace::new(a_d, b_d, sys.c.clone(), sys.d, TimeDomain::Discrete { ts })
}

/// Bilinear (Tustin) discretization.
///
/// Maps the closed right half plane onto the closed unit disk, so positive
/// realness of the continuous system carries over exactly to the sampled
/// one; used when generating fitting data from passive continuous targets
/// (zero-order hold does not preserve positive realness: any strictly
/// proper ZOH model has `Re G` of arbitrary sign at the Nyquist frequency).
pub fn c2d_tustin(sys: &StateSpace, ts: f64) -> Result<StateSpace> {
    if !sys.is_continuous() {
        return Err(Error::domain("c2d_tustin expects a continuous-time system"));
    }
    if !(ts > 0.0) {
        return Err(Error::domain(format!("ts must be > 0, got {ts}")));
    }
    let n = sys.order();
    let id = DMatrix::<f64>::identity(n, n);
    let m = &id - &sys.a * (ts / 2.0);
    let lu = m.lu();
    let minv = lu.try_inverse().ok_or_else(|| {
        Error::numeric("Tustin pole at sampling frequency: (I - A*ts/2) singular")
    })?;
    let a_d = &minv * (&id + &sys.a * (ts / 2.0));
    let b_d = &minv * (&sys.b * ts);
    let c_d_row = sys.c.transpose() * &minv;
    let d_d = sys.d + (sys.c.transpose() * &minv * &sys.b)[(0, 0)] * (ts / 2.0);
    StateSpace::new(
        a_d,
        b_d,
        c_d_row.transpose(),
        d_d,
        TimeDomain::Discrete { ts },
    )
}

/// Discrete transfer function in powers of `z^-1`:
/// `(num[0] + num[1] z^-1 + ...) / (den[0] + den[1] z^-1 + ...)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteTransferFunction {
    num: Vec<f64>,
    den: Vec<f64>,
    ts: f64,
}

impl DiscreteTransferFunction {
    pub fn new(num: Vec<f64>, den: Vec<f64>, ts: f64) -> Result<Self> {
        if !(ts > 0.0) {
            return Err(Error::domain(format!("ts must be > 0, got {ts}")));
        }
        if den.is_empty() || den[0] == 0.0 {
            return Err(Error::domain("den[0] must be nonzero"));
        }
        if num.iter().chain(den.iter()).any(|v| !v.is_finite()) {
            return Err(Error::numeric(
                "transfer function has non-finite coefficients",
            ));
        }
        Ok(Self { num, den, ts })
    }

    /// The identity system `1`.
    pub fn unit(ts: f64) -> Result<Self> {
        Self::new(vec![1.0], vec![1.0], ts)
    }

    /// A pure `k`-sample delay `z^-k`.
    pub fn delay(k: usize, ts: f64) -> Result<Self> {
        let mut num = vec![0.0; k + 1];
        num[k] = 1.0;
        Self::new(num, vec![1.0], ts)
    }

    pub fn num(&self) -> &[f64] {
        &self.num
    }

    pub fn den(&self) -> &[f64] {
        &self.den
    }

    pub fn ts(&self) -> f64 {
        self.ts
    }

    /// Direct feedthrough `num[0]/den[0]` (the value at `z -> inf`).
    pub fn feedthrough(&self) -> f64 {
        self.num[0] / self.den[0]
    }

    /// Simulates from zero initial state by the difference equation
    /// `den[0] y(t) = sum_k num[k] u(t-k) - sum_{k>=1} den[k] y(t-k)`.
    pub fn simulate(&self, input: &SampledSignal) -> Result<SampledSignal> {
        check_ts_match(self.ts, input.ts())?;
        let u = input.values();
        let mut y = vec![0.0; u.len()];
        for t in 0..u.len() {
            let mut acc = 0.0;
            for (k, &b) in self.num.iter().enumerate() {
                if b != 0.0 && t >= k {
                    acc += b * u[t - k];
                }
            }
            for (k, &a) in self.den.iter().enumerate().skip(1) {
                if a != 0.0 && t >= k {
                    acc -= a * y[t - k];
                }
            }
            y[t] = acc / self.den[0];
        }
        SampledSignal::new(y, self.ts)
    }

    /// Frequency response at angle `theta` (radians per sample).
    pub fn freq_response(&self, theta: f64) -> Complex64 {
        let eval = |coeffs: &[f64]| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (k, &c) in coeffs.iter().enumerate() {
                acc += Complex64::from_polar(c, -(k as f64) * theta);
            }
            acc
        };
        eval(&self.num) / eval(&self.den)
    }

    /// Largest pole magnitude, from the eigenvalues of the denominator's
    /// companion matrix. Returns 0 for an FIR (constant denominator).
    pub fn spectral_radius(&self) -> Result<f64> {
        // Strip trailing zero coefficients; they contribute poles at z = 0.
        let mut den: Vec<f64> = self.den.clone();
        while den.len() > 1 && den.last() == Some(&0.0) {
            den.pop();
        }
        let q = den.len() - 1;
        if q == 0 {
            return Ok(0.0);
        }
        // den(z^-1) = 0  <=>  z^q + (den[1]/den[0]) z^(q-1) + ... = 0
        let mut comp = DMatrix::<f64>::zeros(q, q);
        for i in 1..q {
            comp[(i, i - 1)] = 1.0;
        }
        for k in 1..=q {
            comp[(0, k - 1)] = -den[k] / den[0];
        }
        let eigs = comp.complex_eigenvalues();
        Ok(eigs.iter().map(|e| e.norm()).fold(0.0, f64::max))
    }

    /// Errors unless every pole is strictly inside the unit circle with
    /// margin 1e-9 on the spectral radius.
    pub fn check_stable(&self) -> Result<()> {
        let rho = self.spectral_radius()?;
        if rho > 1.0 - 1e-9 {
            return Err(Error::Unstable {
                spectral_radius: rho,
            });
        }
        Ok(())
    }
}

/// Discrete systems simulable from zero initial state.
pub trait DiscreteSimulation {
    fn simulate_from_rest(&self, input: &SampledSignal) -> Result<SampledSignal>;
}

impl DiscreteSimulation for StateSpace {
    fn simulate_from_rest(&self, input: &SampledSignal) -> Result<SampledSignal> {
        self.simulate(input)
    }
}

impl DiscreteSimulation for DiscreteTransferFunction {
    fn simulate_from_rest(&self, input: &SampledSignal) -> Result<SampledSignal> {
        self.simulate(input)
    }
}

/// Simulates any discrete system (state space or transfer function) from
/// rest; output length equals input length.
pub fn simulate_lti<S: DiscreteSimulation>(sys: &S, input: &SampledSignal) -> Result<SampledSignal> {
    sys.simulate_from_rest(input)
}

/// Controllable-canonical realization of a continuous `num(s)/den(s)` with
/// coefficients in descending powers and `deg num <= deg den`.
pub fn realize_continuous(num: &[f64], den: &[f64]) -> Result<StateSpace> {
    if den.is_empty() || den[0] == 0.0 {
        return Err(Error::domain(
            "denominator must be nonempty with a nonzero lead",
        ));
    }
    if num.len() > den.len() {
        return Err(Error::domain(
            "improper transfer function (deg num > deg den)",
        ));
    }
    let order = den.len() - 1;
    if order == 0 {
        return Err(Error::domain(
            "static gains have no state-space realization",
        ));
    }
    let lead = den[0];
    let mut num_full = vec![0.0; den.len() - num.len()];
    num_full.extend(num.iter().map(|v| v / lead));
    let den_norm: Vec<f64> = den.iter().map(|v| v / lead).collect();
    let d = num_full[0];
    let mut a = DMatrix::<f64>::zeros(order, order);
    for i in 0..order - 1 {
        a[(i, i + 1)] = 1.0;
    }
    for j in 0..order {
        a[(order - 1, j)] = -den_norm[order - j];
    }
    let mut b = DVector::<f64>::zeros(order);
    b[order - 1] = 1.0;
    let mut c = DVector::<f64>::zeros(order);
    for j in 0..order {
        c[j] = num_full[order - j] - d * den_norm[order - j];
    }
    StateSpace::new(a, b, c, d, TimeDomain::Continuous)
}

/// Backward-Euler discrete integrator `gamma * ts / (1 - z^-1)`.
///
/// Simulation recursion: `x(t) = x(t-1) + gamma * ts * e(t)`.
pub fn backward_euler_integrator(gamma: f64, ts: f64) -> Result<DiscreteTransferFunction> {
    if !(ts > 0.0) {
        return Err(Error::domain(format!("ts must be > 0, got {ts}")));
    }
    if !gamma.is_finite() {
        return Err(Error::numeric(format!("gamma must be finite, got {gamma}")));
    }
    DiscreteTransferFunction::new(vec![gamma * ts], vec![1.0, -1.0], ts)
}

/// FIR frequency response `sum_k g_k exp(-j k theta)`.
pub fn fir_freq_response(g: &[f64], theta: f64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for (k, &gk) in g.iter().enumerate() {
        acc += Complex64::from_polar(gk, -(k as f64) * theta);
    }
    acc
}

/// Polynomial product in `z^-1` coefficients.
pub(crate) fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &ai) in a.iter().enumerate() {
        for (j, &bj) in b.iter().enumerate() {
            out[i + j] += ai * bj;
        }
    }
    out
}

/// Polynomial sum in `z^-1` coefficients.
pub(crate) fn poly_add(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len().max(b.len())];
    for (i, &ai) in a.iter().enumerate() {
        out[i] += ai;
    }
    for (i, &bi) in b.iter().enumerate() {
        out[i] += bi;
    }
    out
}

/// Closed loop `P*C / (1 + P*C)` as a transfer function.
pub fn closed_loop_tf(
    plant: &DiscreteTransferFunction,
    controller: &DiscreteTransferFunction,
) -> Result<DiscreteTransferFunction> {
    check_ts_match(plant.ts(), controller.ts())?;
    let open_num = poly_mul(plant.num(), controller.num());
    let open_den = poly_mul(plant.den(), controller.den());
    let cl_den = poly_add(&open_den, &open_num);
    if cl_den[0].abs() < 1e-12 * cl_den.iter().map(|v| v.abs()).fold(0.0, f64::max).max(1.0) {
        return Err(Error::AlgebraicLoop(
            "1 + P(inf)C(inf) = 0: closed loop is ill-posed".into(),
        ));
    }
    DiscreteTransferFunction::new(open_num, cl_den, plant.ts())
}

/// Truncated impulse-response energy distance between a reference model and
/// the closed loop `P*C/(1+P*C)`:
/// `sqrt(sum_{t<horizon} h(t)^2)` with `h` the impulse response of the
/// difference. Diagnostic only.
pub fn h2_matching_distance(
    mr: &DiscreteTransferFunction,
    plant: &DiscreteTransferFunction,
    controller: &crate::passivity::IFIRController,
    horizon: usize,
) -> Result<f64> {
    if horizon == 0 {
        return Err(Error::domain("horizon must be >= 1"));
    }
    check_ts_match(mr.ts(), plant.ts())?;
    let ctf = controller.to_tf()?;
    let cl = closed_loop_tf(plant, &ctf)?;
    let mut impulse = vec![0.0; horizon];
    impulse[0] = 1.0;
    let delta = SampledSignal::new(impulse, mr.ts())?;
    let h_mr = mr.simulate(&delta)?;
    let h_cl = cl.simulate(&delta)?;
    let sum: f64 = h_mr
        .values()
        .iter()
        .zip(h_cl.values())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok(sum.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::passivity::IFIRController;
    use crate::signal::step_signal;
    use approx::assert_relative_eq;

    fn integrator_ct() -> StateSpace {
        StateSpace::new(
            DMatrix::from_element(1, 1, 0.0),
            DVector::from_element(1, 1.0),
            DVector::from_element(1, 1.0),
            0.0,
            TimeDomain::Continuous,
        )
        .unwrap()
    }

    #[test]
    fn zoh_of_pure_integrator_is_exact() {
        let d = c2d_zoh(&integrator_ct(), 0.05).unwrap();
        assert_eq!(d.a()[(0, 0)], 1.0);
        assert_relative_eq!(d.b()[0], 0.05, epsilon = 1e-16);
    }

    #[test]
    fn zoh_of_first_order_lag_matches_closed_form() {
        // 1/(0.5 s + 1): A = -2, B = 2, C = 1
        let sys = StateSpace::new(
            DMatrix::from_element(1, 1, -2.0),
            DVector::from_element(1, 2.0),
            DVector::from_element(1, 1.0),
            0.0,
            TimeDomain::Continuous,
        )
        .unwrap();
        let d = c2d_zoh(&sys, 0.05).unwrap();
        let a_exact = (-0.1f64).exp();
        assert_relative_eq!(d.a()[(0, 0)], a_exact, max_relative = 1e-12);
        assert_relative_eq!(d.b()[0], 1.0 - a_exact, max_relative = 1e-12);
    }

    #[test]
    fn zoh_with_zero_dynamics_scales_b_by_ts() {
        let sys = StateSpace::new(
            DMatrix::zeros(2, 2),
            DVector::from_vec(vec![3.0, -1.0]),
            DVector::from_vec(vec![1.0, 0.0]),
            0.0,
            TimeDomain::Continuous,
        )
        .unwrap();
        let d = c2d_zoh(&sys, 0.25).unwrap();
        assert_eq!(d.a().clone_owned(), DMatrix::identity(2, 2));
        assert_relative_eq!(d.b()[0], 0.75, epsilon = 1e-15);
        assert_relative_eq!(d.b()[1], -0.25, epsilon = 1e-15);
    }

    #[test]
    fn backward_euler_step_accumulates() {
        let tf = backward_euler_integrator(1.0, 0.1).unwrap();
        let y = tf.simulate(&step_signal(3, 0.1).unwrap()).unwrap();
        assert_relative_eq!(y.values()[0], 0.1, epsilon = 1e-15);
        assert_relative_eq!(y.values()[1], 0.2, epsilon = 1e-15);
        assert_relative_eq!(y.values()[2], 0.3, epsilon = 1e-15);
    }

    #[test]
    fn backward_euler_zero_gain_is_zero() {
        let tf = backward_euler_integrator(0.0, 0.1).unwrap();
        let y = tf.simulate(&step_signal(5, 0.1).unwrap()).unwrap();
        assert!(y.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn backward_euler_impulse_is_held() {
        let tf = backward_euler_integrator(2.0, 0.05).unwrap();
        let u = SampledSignal::new(vec![1.0, 0.0, 0.0, 0.0], 0.05).unwrap();
        let y = tf.simulate(&u).unwrap();
        for &v in y.values() {
            assert_relative_eq!(v, 0.1, epsilon = 1e-15);
        }
    }

    #[test]
    fn identity_system_passes_input_through() {
        let tf = DiscreteTransferFunction::unit(0.1).unwrap();
        let u = SampledSignal::new(vec![0.3, -1.0, 2.5], 0.1).unwrap();
        let y = tf.simulate(&u).unwrap();
        assert_eq!(y.values(), u.values());
    }

    #[test]
    fn one_step_delay_shifts() {
        let tf = DiscreteTransferFunction::delay(1, 0.1).unwrap();
        let u = SampledSignal::new(vec![1.0, 0.0, 0.0], 0.1).unwrap();
        let y = tf.simulate(&u).unwrap();
        assert_eq!(y.values(), &[0.0, 1.0, 0.0]);
    }

    #[test]
    fn scalar_state_recursion_by_hand() {
        // A=0.5, B=1, C=1, D=0, impulse input -> [0, 1, 0.5, 0.25]
        let sys = StateSpace::new(
            DMatrix::from_element(1, 1, 0.5),
            DVector::from_element(1, 1.0),
            DVector::from_element(1, 1.0),
            0.0,
            TimeDomain::Discrete { ts: 0.1 },
        )
        .unwrap();
        let u = SampledSignal::new(vec![1.0, 0.0, 0.0, 0.0], 0.1).unwrap();
        let y = sys.simulate(&u).unwrap();
        assert_eq!(y.values(), &[0.0, 1.0, 0.5, 0.25]);
    }

    #[test]
    fn simulate_lti_accepts_both_representations() {
        let ss = StateSpace::new(
            DMatrix::from_element(1, 1, 0.5),
            DVector::from_element(1, 1.0),
            DVector::from_element(1, 1.0),
            0.0,
            TimeDomain::Discrete { ts: 0.1 },
        )
        .unwrap();
        let tf = ss.to_tf().unwrap();
        let u = SampledSignal::new(vec![1.0, -0.5, 0.25], 0.1).unwrap();
        let a = simulate_lti(&ss, &u).unwrap();
        let b = simulate_lti(&tf, &u).unwrap();
        for (x, y) in a.values().iter().zip(b.values()) {
            assert_relative_eq!(x, y, epsilon = 1e-12);
        }
    }

    #[test]
    fn ts_mismatch_rejected() {
        let sys = StateSpace::new(
            DMatrix::from_element(1, 1, 0.5),
            DVector::from_element(1, 1.0),
            DVector::from_element(1, 1.0),
            0.0,
            TimeDomain::Discrete { ts: 0.1 },
        )
        .unwrap();
        let u = SampledSignal::new(vec![1.0], 0.2).unwrap();
        assert!(matches!(sys.simulate(&u), Err(Error::TsMismatch { .. })));
    }

    #[test]
    fn fir_response_examples() {
        assert_relative_eq!(fir_freq_response(&[1.0], 0.7).re, 1.0);
        assert_relative_eq!(fir_freq_response(&[1.0], 0.7).im, 0.0);
        let r = fir_freq_response(&[1.0, 1.0], std::f64::consts::PI);
        assert_relative_eq!(r.norm(), 0.0, epsilon = 1e-15);
        let r = fir_freq_response(&[0.0, 1.0], std::f64::consts::FRAC_PI_2);
        assert_relative_eq!(r.re, 0.0, epsilon = 1e-15);
        assert_relative_eq!(r.im, -1.0, epsilon = 1e-15);
    }

    #[test]
    fn tf_conversion_round_trips_through_simulation() {
        let sys = StateSpace::new(
            DMatrix::from_row_slice(2, 2, &[0.9, 0.1, -0.2, 0.7]),
            DVector::from_vec(vec![1.0, 0.5]),
            DVector::from_vec(vec![1.0, -1.0]),
            0.3,
            TimeDomain::Discrete { ts: 0.05 },
        )
        .unwrap();
        let tf = sys.to_tf().unwrap();
        let u = SampledSignal::new((0..40).map(|t| ((t * 7) % 5) as f64 - 2.0).collect(), 0.05)
            .unwrap();
        let y_ss = sys.simulate(&u).unwrap();
        let y_tf = tf.simulate(&u).unwrap();
        for (a, b) in y_ss.values().iter().zip(y_tf.values()) {
            assert_relative_eq!(a, b, epsilon = 1e-10, max_relative = 1e-10);
        }
    }

    #[test]
    fn spectral_radius_of_delay_and_lag() {
        let tf = DiscreteTransferFunction::new(vec![1.0], vec![1.0, -0.5], 0.1).unwrap();
        assert_relative_eq!(tf.spectral_radius().unwrap(), 0.5, epsilon = 1e-12);
        assert!(tf.check_stable().is_ok());
        let unstable = DiscreteTransferFunction::new(vec![1.0], vec![1.0, -1.0], 0.1).unwrap();
        assert!(unstable.check_stable().is_err());
    }

    #[test]
    fn h2_distance_zero_for_identical_maps() {
        // mr equals the closed loop itself
        let plant = DiscreteTransferFunction::new(vec![0.0, 0.5], vec![1.0, -0.3], 0.1).unwrap();
        let c = IFIRController::new(0.2, vec![1.0, -0.2], 0.1).unwrap();
        let cl = closed_loop_tf(&plant, &c.to_tf().unwrap()).unwrap();
        let d = h2_matching_distance(&cl, &plant, &c, 50).unwrap();
        assert_relative_eq!(d, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn h2_distance_unit_for_unit_target_and_zero_plant() {
        let mr = DiscreteTransferFunction::unit(0.1).unwrap();
        let plant = DiscreteTransferFunction::new(vec![0.0], vec![1.0], 0.1).unwrap();
        let c = IFIRController::new(0.0, vec![1.0], 0.1).unwrap();
        let d = h2_matching_distance(&mr, &plant, &c, 10).unwrap();
        assert_relative_eq!(d, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn h2_distance_delay_target_zero_loop() {
        let mr = DiscreteTransferFunction::delay(1, 0.1).unwrap();
        let plant = DiscreteTransferFunction::new(vec![0.0], vec![1.0], 0.1).unwrap();
        let c = IFIRController::new(0.0, vec![1.0], 0.1).unwrap();
        let d = h2_matching_distance(&mr, &plant, &c, 10).unwrap();
        assert_relative_eq!(d, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn tustin_of_first_order_lag_is_positive_real() {
        let sys = StateSpace::new(
            DMatrix::from_element(1, 1, -2.0),
            DVector::from_element(1, 2.0),
            DVector::from_element(1, 1.0),
            0.0,
            TimeDomain::Continuous,
        )
        .unwrap();
        let d = c2d_tustin(&sys, 0.05).unwrap();
        let tf = d.to_tf().unwrap();
        // DC gain preserved, Nyquist-frequency response exactly zero.
        assert_relative_eq!(tf.freq_response(0.0).re, 1.0, max_relative = 1e-12);
        let nyq = tf.freq_response(std::f64::consts::PI);
        assert_relative_eq!(nyq.norm(), 0.0, epsilon = 1e-12);
        for i in 0..200 {
            let th = std::f64::consts::PI * i as f64 / 199.0;
            assert!(tf.freq_response(th).re >= -1e-12);
        }
    }
}
