//! Browser demo bindings: three interactive operations over the built-in
//! example systems, each returning a JSON payload for the plotting page in
//! `www/`. All computation happens in the core crate; the wrappers only cap
//! the problem sizes so a click stays responsive.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use ifir::design::{
    design_from_data, design_from_regressors, DesignSpec, EpsilonMode, MethodSpec, Rho0Mode,
};
use ifir::lti::{c2d_tustin, c2d_zoh, fir_freq_response};
use ifir::passivity::{passivity_margin, toeplitz_min_eig};
use ifir::plants::{
    closed_loop_sim, pid_controller, reference_model, target_filter, target_fit_data, two_cart,
    two_cart_probe_data, LoopController, LoopPlant, TwoCartModel, TwoCartParams, PID_GAINS_MR1,
    PID_GAINS_MR2,
};
use ifir::signal::step_signal;
use ifir::solver::SolveOptions;
use ifir::vrft::{assemble_problem, GammaMode};

const TS: f64 = 0.05;
const NYQUIST_POINTS: usize = 512;

fn method_from_str(name: &str, epsilon: f64) -> Result<MethodSpec, String> {
    let eps = if epsilon > 0.0 {
        EpsilonMode::Override(epsilon)
    } else {
        EpsilonMode::Auto
    };
    // section size / sample count stay on the auto schedule so a shortage
    // of passivity retries instead of returning uncertified
    match name {
        "kyp" => Ok(MethodSpec::Kyp),
        "toeplitz" => Ok(MethodSpec::Toeplitz {
            n: None,
            epsilon: eps,
        }),
        "posreal" => Ok(MethodSpec::Posreal {
            samples: None,
            epsilon: eps,
        }),
        other => Err(format!("unknown method '{other}'")),
    }
}

#[derive(Serialize)]
struct Curve {
    re: Vec<f64>,
    im: Vec<f64>,
}

#[derive(Serialize)]
struct FitResult {
    target: Curve,
    fitted: Curve,
    margin: f64,
    objective: f64,
    unconstrained_objective: f64,
    attempts: usize,
    iterations: usize,
    solve_ms: f64,
    toeplitz_min_eig: f64,
}

fn fit_target_inner(q: usize, method: &str, m: usize, epsilon: f64) -> Result<String, String> {
    let m = m.clamp(2, 80);
    let (e, u) = target_fit_data(q, 300, TS).map_err(|e| e.to_string())?;
    let rs = assemble_problem(&u, &e, m, GammaMode::Fixed(0.0)).map_err(|e| e.to_string())?;
    let spec = DesignSpec {
        method: method_from_str(method, epsilon)?,
        m,
        gamma: GammaMode::Fixed(0.0),
        rho0: Rho0Mode::Auto,
        rho: 1.0,
    };
    let tol = if method == "kyp" { 1e-7 } else { 1e-6 };
    let opts = SolveOptions {
        max_iters: 30_000,
        ..SolveOptions::with_tol(tol)
    };
    let (ctrl, report) = design_from_regressors(&rs, &spec, &opts).map_err(|e| e.to_string())?;

    let target_tf = c2d_tustin(&target_filter(q).map_err(|e| e.to_string())?, TS)
        .and_then(|ss| ss.to_tf())
        .map_err(|e| e.to_string())?;
    let mut target = Curve {
        re: Vec::new(),
        im: Vec::new(),
    };
    let mut fitted = Curve {
        re: Vec::new(),
        im: Vec::new(),
    };
    for i in 0..NYQUIST_POINTS {
        let theta = std::f64::consts::PI * i as f64 / (NYQUIST_POINTS - 1) as f64;
        let t = target_tf.freq_response(theta);
        let f = fir_freq_response(ctrl.g(), theta);
        target.re.push(t.re);
        target.im.push(t.im);
        fitted.re.push(f.re);
        fitted.im.push(f.im);
    }
    let result = FitResult {
        target,
        fitted,
        margin: report.margin,
        objective: report.objective,
        unconstrained_objective: report.unconstrained_objective,
        attempts: report.attempts,
        iterations: report.iterations,
        solve_ms: report.solve_time.as_secs_f64() * 1e3,
        toeplitz_min_eig: toeplitz_min_eig(ctrl.g(), 2 * m).map_err(|e| e.to_string())?,
    };
    serde_json::to_string(&result).map_err(|e| e.to_string())
}

/// Fits a passive FIR filter to one of the targets `1/(0.5s+1)^q`
/// (`q` = 1 passive, 2 and 3 increasingly non-passive) with the chosen
/// constraint formulation and returns both Nyquist curves.
#[wasm_bindgen]
pub fn fit_target(q: usize, method: &str, m: usize, epsilon: f64) -> Result<String, JsError> {
    fit_target_inner(q, method, m, epsilon).map_err(|e| JsError::new(&e))
}

#[derive(Serialize)]
struct StepResult {
    t: Vec<f64>,
    reference_model: Vec<f64>,
    ifir: Vec<f64>,
    pid: Option<Vec<f64>>,
    open_loop: Vec<f64>,
    rms_ifir: f64,
    rms_pid: Option<f64>,
    gamma: f64,
    margin: f64,
    iterations: usize,
    solve_ms: f64,
}

fn two_cart_step_inner(reference: &str, m: usize, nonlinear: bool) -> Result<String, String> {
    let m = m.clamp(2, 120);
    let (t_const, pid_gains) = match reference {
        "mr1" => (0.25, Some(PID_GAINS_MR1)),
        "mr2" => (0.125, Some(PID_GAINS_MR2)),
        "slow" => (1.0, None),
        other => return Err(format!("unknown reference '{other}' (mr1, mr2 or slow)")),
    };
    let params = if nonlinear {
        TwoCartParams::nominal_piecewise()
    } else {
        TwoCartParams::nominal()
    };
    let model = two_cart(params).map_err(|e| e.to_string())?;
    let (u, y) = two_cart_probe_data(&model, TS, 2001).map_err(|e| e.to_string())?;
    let mr_d = c2d_zoh(
        &reference_model(t_const, 1.0).map_err(|e| e.to_string())?,
        TS,
    )
    .map_err(|e| e.to_string())?;
    let mr_tf = mr_d.to_tf().map_err(|e| e.to_string())?;

    let spec = DesignSpec {
        method: MethodSpec::Posreal {
            samples: None,
            epsilon: EpsilonMode::Override(1e-4),
        },
        m,
        gamma: GammaMode::Free,
        rho0: Rho0Mode::Auto,
        rho: 1.0,
    };
    let opts = SolveOptions {
        max_iters: 30_000,
        ..SolveOptions::with_tol(1e-6)
    };
    let (ctrl, report) =
        design_from_data(&u, &y, &mr_tf, &spec, &opts, None).map_err(|e| e.to_string())?;

    let horizon = if nonlinear { 1200 } else { 500 };
    let r = step_signal(horizon, TS).map_err(|e| e.to_string())?;
    let y_ref = mr_d.simulate(&r).map_err(|e| e.to_string())?;

    let plant = match model {
        TwoCartModel::Linear(ss) => {
            LoopPlant::Discrete(c2d_zoh(&ss, TS).map_err(|e| e.to_string())?)
        }
        TwoCartModel::Nonlinear(nl) => LoopPlant::Nonlinear(nl),
    };
    let (y_ifir, _) = closed_loop_sim(&plant, &LoopController::Ifir(ctrl.clone()), &r)
        .map_err(|e| e.to_string())?;
    let open_loop = match &plant {
        LoopPlant::Discrete(ss) => ss.simulate(&r).map_err(|e| e.to_string())?,
        LoopPlant::Nonlinear(nl) => nl.simulate(&r).map_err(|e| e.to_string())?.0,
        LoopPlant::Tf(tf) => tf.simulate(&r).map_err(|e| e.to_string())?,
    };
    let rms = |a: &[f64]| {
        (a.iter()
            .zip(y_ref.values())
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            / a.len() as f64)
            .sqrt()
    };
    let (y_pid, rms_pid) = match pid_gains {
        Some([kp, kd, ki]) => {
            let pid = pid_controller(kp, kd, ki, TS).map_err(|e| e.to_string())?;
            let (y_pid, _) =
                closed_loop_sim(&plant, &LoopController::Tf(pid), &r).map_err(|e| e.to_string())?;
            let rms_pid = rms(y_pid.values());
            (Some(y_pid.values().to_vec()), Some(rms_pid))
        }
        None => (None, None),
    };
    let result = StepResult {
        t: (0..horizon).map(|k| k as f64 * TS).collect(),
        reference_model: y_ref.values().to_vec(),
        rms_ifir: rms(y_ifir.values()),
        ifir: y_ifir.values().to_vec(),
        pid: y_pid,
        open_loop: open_loop.values().to_vec(),
        rms_pid,
        gamma: ctrl.gamma(),
        margin: report.margin,
        iterations: report.iterations,
        solve_ms: report.solve_time.as_secs_f64() * 1e3,
    };
    serde_json::to_string(&result).map_err(|e| e.to_string())
}

/// Designs a passive iFIR for the two-cart plant against a reference model
/// (`mr1`, `mr2`, or `slow` for the detuned nonlinear case) and returns the
/// closed-loop step responses next to the PID baseline and the open loop.
#[wasm_bindgen]
pub fn two_cart_step(reference: &str, m: usize, nonlinear: bool) -> Result<String, JsError> {
    two_cart_step_inner(reference, m, nonlinear).map_err(|e| JsError::new(&e))
}

#[derive(Serialize)]
struct VerifyResult {
    m: usize,
    ts: f64,
    gamma: f64,
    margin: f64,
    certified: bool,
    nyquist: Curve,
    toeplitz_min_eigs: Vec<f64>,
}

fn verify_controller_inner(text: &str) -> Result<String, String> {
    let c = ifir::controller_file::parse(text).map_err(|e| e.to_string())?;
    if c.order() > 2000 {
        return Err("controller too large for the demo".into());
    }
    let margin = passivity_margin(c.g(), 100_000).map_err(|e| e.to_string())?;
    let mut nyquist = Curve {
        re: Vec::new(),
        im: Vec::new(),
    };
    for i in 0..NYQUIST_POINTS {
        let theta = std::f64::consts::PI * i as f64 / (NYQUIST_POINTS - 1) as f64;
        let v = fir_freq_response(c.g(), theta);
        nyquist.re.push(v.re);
        nyquist.im.push(v.im);
    }
    let toeplitz_min_eigs = [1usize, 2, 4]
        .iter()
        .map(|&f| toeplitz_min_eig(c.g(), f * c.order()).map_err(|e| e.to_string()))
        .collect::<Result<Vec<_>, _>>()?;
    let result = VerifyResult {
        m: c.order(),
        ts: c.ts(),
        gamma: c.gamma(),
        margin,
        certified: c.gamma() >= 0.0 && margin >= -1e-6,
        nyquist,
        toeplitz_min_eigs,
    };
    serde_json::to_string(&result).map_err(|e| e.to_string())
}

/// Parses an `ifir-v1` controller file and returns its passivity
/// diagnostics and Nyquist locus.
#[wasm_bindgen]
pub fn verify_controller(text: &str) -> Result<String, JsError> {
    verify_controller_inner(text).map_err(|e| JsError::new(&e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fit_target_returns_well_formed_json() {
        let json = fit_target_inner(2, "posreal", 30, 1e-3).unwrap();
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(v["target"]["re"].as_array().unwrap().len(), NYQUIST_POINTS);
        assert_eq!(v["fitted"]["im"].as_array().unwrap().len(), NYQUIST_POINTS);
        assert!(v["margin"].as_f64().unwrap() >= -1e-6);
    }

    #[test]
    fn two_cart_step_tracks_reference() {
        let json = two_cart_step_inner("mr1", 40, false).unwrap();
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        let rms_ifir = v["rms_ifir"].as_f64().unwrap();
        let rms_pid = v["rms_pid"].as_f64().unwrap();
        assert!(rms_ifir < rms_pid, "ifir {rms_ifir} vs pid {rms_pid}");
        assert!(v["gamma"].as_f64().unwrap() > 0.0);
    }

    #[test]
    fn verify_rejects_garbage_and_scores_unit() {
        assert!(verify_controller_inner("junk").is_err());
        let text = "ifir-v1\nts=5.0000000000000003e-2\ngamma=0.0000000000000000e0\nm=1\ng0=1.0000000000000000e0\n";
        let json = verify_controller_inner(text).unwrap();
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert!(v["certified"].as_bool().unwrap());
        assert!((v["margin"].as_f64().unwrap() - 2.0).abs() < 1e-9);
    }

    #[test]
    fn unknown_inputs_are_rejected() {
        assert!(fit_target_inner(2, "sorcery", 30, 1e-3).is_err());
        assert!(two_cart_step_inner("mr9", 30, false).is_err());
    }
}
