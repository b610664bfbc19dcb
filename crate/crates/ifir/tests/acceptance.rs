//! Acceptance suite: one test per release criterion, each printing a
//! PASS/FAIL line with the measured quantities.
//!
//! Wall-clock-sensitive tests take a shared lock so parallel test threads
//! do not distort their timings.

#![allow(clippy::needless_range_loop)]

use std::sync::Mutex;
use std::time::Instant;

use ifir::design::{
    design_from_data, design_from_regressors, unconstrained_fit, DesignSpec, EpsilonMode,
    MethodSpec, Rho0Mode,
};
use ifir::lti::{c2d_tustin, c2d_zoh, fir_freq_response};
use ifir::passivity::{epsilon_bound, lipschitz_bound_check, passivity_margin};
use ifir::plants::{
    closed_loop_sim, pid_controller, pid_controller_role_swapped, reference_model, target_filter,
    target_fit_data, two_cart, two_cart_probe_data, LoopController, LoopPlant, TwoCartModel,
    TwoCartParams, PID_GAINS_MR1,
};
use ifir::signal::step_signal;
use ifir::solver::{
    oracle_solve_small, solve, ConstrainedLSProblem, LinearInequality, SolveOptions, SolveStatus,
};
use ifir::vrft::{assemble_problem, GammaMode};
use nalgebra::{DMatrix, DVector};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

static TIMING_LOCK: Mutex<()> = Mutex::new(());

const TS: f64 = 0.05;

fn fit_spec(method: MethodSpec, m: usize) -> DesignSpec {
    DesignSpec {
        method,
        m,
        gamma: GammaMode::Fixed(0.0),
        rho0: Rho0Mode::Auto,
        rho: 1.0,
    }
}

/// Certification of all three formulations against the non-passive target
/// `1/(0.5s+1)^2` at m = 60.
#[test]
fn certify_all_methods_on_nonpassive_target() {
    let _guard = TIMING_LOCK.lock().unwrap();
    let m = 60;
    let (e, u) = target_fit_data(2, 201, TS).unwrap();
    let rs = assemble_problem(&u, &e, m, GammaMode::Fixed(0.0)).unwrap();

    let cases = [
        ("kyp", MethodSpec::Kyp, SolveOptions::with_tol(1e-8)),
        (
            "toeplitz",
            MethodSpec::Toeplitz {
                n: None,
                epsilon: EpsilonMode::Auto,
            },
            SolveOptions::with_tol(1e-5),
        ),
        (
            "posreal",
            MethodSpec::Posreal {
                samples: None,
                epsilon: EpsilonMode::Override(1e-3),
            },
            SolveOptions::with_tol(1e-5),
        ),
    ];
    for (name, method, opts) in cases {
        let t = Instant::now();
        let (ctrl, report) = design_from_regressors(&rs, &fit_spec(method, m), &opts).unwrap();
        let elapsed = t.elapsed().as_secs_f64();
        let margin = passivity_margin(ctrl.g(), 100_000).unwrap();
        let ok = margin >= -1e-6 && ctrl.gamma() >= 0.0 && elapsed < 60.0;
        println!(
            "{} certification[{name}]: margin={margin:.3e} gamma={} time={elapsed:.1}s attempts={}",
            if ok { "PASS" } else { "FAIL" },
            ctrl.gamma(),
            report.attempts
        );
        assert!(margin >= -1e-6, "{name}: margin {margin}");
        assert!(ctrl.gamma() >= 0.0, "{name}: gamma {}", ctrl.gamma());
        assert!(elapsed < 60.0, "{name}: took {elapsed:.1} s");
    }
}

/// Passive-target fidelity: the constrained fit of `1/(0.5s+1)` at m = 100
/// tracks the sampled target's frequency response within 2% of its peak.
#[test]
fn passive_target_fidelity() {
    let m = 100;
    let (e, u) = target_fit_data(1, 400, TS).unwrap();
    let rs = assemble_problem(&u, &e, m, GammaMode::Fixed(0.0)).unwrap();
    let spec = fit_spec(
        MethodSpec::Posreal {
            samples: None,
            epsilon: EpsilonMode::Override(1e-4),
        },
        m,
    );
    let (ctrl, _) = design_from_regressors(&rs, &spec, &SolveOptions::with_tol(1e-8)).unwrap();

    let target = c2d_tustin(&target_filter(1).unwrap(), TS)
        .unwrap()
        .to_tf()
        .unwrap();
    let mut worst = 0.0f64;
    let mut peak = 0.0f64;
    for i in 0..2048 {
        let theta = std::f64::consts::PI * i as f64 / 2047.0;
        let gt = target.freq_response(theta);
        let gd = fir_freq_response(ctrl.g(), theta);
        worst = worst.max((gt - gd).norm());
        peak = peak.max(gt.norm());
    }
    let ok = worst <= 0.02 * peak;
    println!(
        "{} passive-target fidelity: max|dG|={worst:.3e} vs allowed {:.3e}",
        if ok { "PASS" } else { "FAIL" },
        0.02 * peak
    );
    assert!(ok, "fidelity {worst} > {}", 0.02 * peak);
}

/// Soundness of the sampled positive-realness bound: every coefficient
/// vector feasible for the sampled constraints with the spacing epsilon has
/// nonnegative dense-grid margin. 1000 randomized feasible instances.
#[test]
fn epsilon_bound_soundness_fuzz() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x1f1a_7001);
    let mut found = 0usize;
    let mut attempts = 0usize;
    while found < 1000 {
        attempts += 1;
        assert!(
            attempts < 400_000,
            "feasible-instance sampler stalled at {found}"
        );
        let m = rng.random_range(1..=20usize);
        let samples = rng.random_range(2..=(4 * m).max(2));
        let rho0 = rng.random_range(1e-3..=10.0f64);
        let rho = rng.random_range(0.05..=1.0f64);
        let eps = epsilon_bound(rho0, rho, m, samples).unwrap();
        if eps > 1.8 * rho0 {
            continue; // no coefficient vector in the decay box can reach it
        }
        // biased draw: positive g_0, shrunk tail, then exact feasibility check
        let beta = rng.random_range(0.0..=1.0f64);
        let mut g = vec![0.0; m];
        g[0] = rng.random_range((eps / 2.0).min(rho0)..=rho0);
        for k in 1..m {
            let bound = rho0 * rho.powi(k as i32);
            g[k] = rng.random_range(-1.0..=1.0f64) * beta * bound;
        }
        let feasible = (0..=samples).all(|q| {
            let theta = std::f64::consts::PI * q as f64 / samples as f64;
            let f: f64 = 2.0
                * g.iter()
                    .enumerate()
                    .map(|(k, &gk)| gk * (k as f64 * theta).cos())
                    .sum::<f64>();
            f >= eps
        });
        if !feasible {
            continue;
        }
        found += 1;
        let margin = passivity_margin(&g, 100_000).unwrap();
        assert!(
            margin >= 0.0,
            "feasible instance violated soundness: m={m} M={samples} rho0={rho0} rho={rho} margin={margin}"
        );
    }
    println!(
        "PASS epsilon-bound soundness: 1000 feasible instances, zero violations ({attempts} draws)"
    );
}

/// Cosine-sum Lipschitz inequality on 10^4 random triples.
#[test]
fn cosine_lipschitz_fuzz() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x11b5_c41f);
    for i in 0..10_000 {
        let m = rng.random_range(1..=20usize);
        let g: Vec<f64> = (0..m).map(|_| rng.random_range(-5.0..=5.0)).collect();
        let theta = rng.random_range(-7.0..=7.0f64);
        let delta = rng.random_range(-3.5..=3.5f64);
        assert!(
            lipschitz_bound_check(&g, theta, delta),
            "violation at instance {i}: m={m} theta={theta} delta={delta}"
        );
    }
    println!("PASS cosine Lipschitz bound: 10000 triples, zero violations");
}

/// With inactive constraints, the Toeplitz (n = 2m) and sampled (M = 2m)
/// designs agree with the unconstrained least squares to 1e-3.
#[test]
fn inactive_constraints_agree_with_unconstrained() {
    let m = 100;
    let (e, u) = target_fit_data(1, 400, TS).unwrap();
    let rs = assemble_problem(&u, &e, m, GammaMode::Fixed(0.0)).unwrap();
    let opts = SolveOptions::with_tol(1e-8);
    let ls = unconstrained_fit(&rs, &opts).unwrap();

    for (name, method) in [
        (
            "toeplitz",
            MethodSpec::Toeplitz {
                n: Some(2 * m),
                epsilon: EpsilonMode::Override(1e-6),
            },
        ),
        (
            "posreal",
            MethodSpec::Posreal {
                samples: Some(2 * m),
                epsilon: EpsilonMode::Override(1e-6),
            },
        ),
    ] {
        let (ctrl, _) = design_from_regressors(&rs, &fit_spec(method, m), &opts).unwrap();
        let dg = ctrl
            .g()
            .iter()
            .zip(ls.x.as_slice())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        let ok = dg <= 1e-3;
        println!(
            "{} formulation agreement[{name}]: |g - g_ls|_inf = {dg:.3e}",
            if ok { "PASS" } else { "FAIL" }
        );
        assert!(ok, "{name} drifted {dg}");
    }
}

/// KYP feasibility of the returned auxiliary matrix at m = 30: both the
/// X block and the positive-real LMI block check out by independent
/// eigendecomposition.
#[test]
fn kyp_feasibility_m30() {
    let m = 30;
    let (e, u) = target_fit_data(2, 201, TS).unwrap();
    let rs = assemble_problem(&u, &e, m, GammaMode::Fixed(0.0)).unwrap();
    let (_, report) = design_from_regressors(
        &rs,
        &fit_spec(MethodSpec::Kyp, m),
        &SolveOptions::with_tol(1e-7),
    )
    .unwrap();
    let x_min = report.check.psd_min_eigs[0];
    let lmi_min = report.check.psd_min_eigs[1];
    let ok = x_min >= -1e-6 && lmi_min >= -1e-6;
    println!(
        "{} kyp feasibility: min eig X block = {x_min:.3e}, min eig LMI block = {lmi_min:.3e}",
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(ok, "X {x_min}, LMI {lmi_min}");
}

/// The splitting solver matches the exhaustive active-set oracle on 100
/// random tiny problems, within 1e-5 in both iterate and objective.
#[test]
fn solver_matches_active_set_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x07ac1e5);
    let opts = SolveOptions {
        abs_tol: 1e-10,
        rel_tol: 1e-10,
        ..SolveOptions::default()
    };
    let mut done = 0usize;
    let mut draws = 0usize;
    let mut worst_x = 0.0f64;
    let mut worst_obj = 0.0f64;
    while done < 100 {
        draws += 1;
        assert!(draws < 10_000, "instance sampler stalled");
        let d = rng.random_range(1..=3usize);
        let design = DMatrix::from_fn(d + 2, d, |_, _| rng.random_range(-1.0..=1.0));
        let ata = design.transpose() * &design;
        if ata.symmetric_eigen().eigenvalues.min() < 0.1 {
            continue; // keep the objective strongly convex so x* is unique
        }
        let target = DVector::from_fn(d + 2, |_, _| rng.random_range(-2.0..=2.0));
        let anchor = DVector::from_fn(d, |_, _| rng.random_range(-1.0..=1.0));
        let n_ineq = rng.random_range(1..=6usize);
        let mut lin = Vec::with_capacity(n_ineq);
        for _ in 0..n_ineq {
            let coeffs: Vec<(usize, f64)> =
                (0..d).map(|j| (j, rng.random_range(-1.0..=1.0))).collect();
            let slack = rng.random_range(0.0..=1.0f64);
            let bound = coeffs.iter().map(|&(j, c)| c * anchor[j]).sum::<f64>() - slack;
            lin.push(LinearInequality { coeffs, bound });
        }
        let p = ConstrainedLSProblem::new(design, target, d, lin, vec![]).unwrap();
        let Ok(reference) = oracle_solve_small(&p) else {
            continue; // degenerate KKT systems: resample
        };
        let sol = solve(&p, &opts).unwrap();
        assert_eq!(
            sol.status,
            SolveStatus::Optimal,
            "instance {done} did not converge"
        );
        let dx = sol
            .x
            .iter()
            .zip(reference.x.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        let dobj = (sol.objective - reference.objective).abs();
        assert!(dx <= 1e-5, "instance {done}: |x - x_oracle| = {dx}");
        assert!(dobj <= 1e-5, "instance {done}: |obj - obj_oracle| = {dobj}");
        worst_x = worst_x.max(dx);
        worst_obj = worst_obj.max(dobj);
        done += 1;
    }
    println!(
        "PASS solver-oracle equivalence: 100 instances, worst |dx|={worst_x:.2e}, worst |dobj|={worst_obj:.2e}"
    );
}

/// Two-cart closed loop: the certified design tracks the reference model
/// strictly better than the PID baseline over a 20 s step.
#[test]
fn two_cart_tracking_beats_pid() {
    let _guard = TIMING_LOCK.lock().unwrap();
    let t_all = Instant::now();
    let model = two_cart(TwoCartParams::nominal()).unwrap();
    let (u, y) = two_cart_probe_data(&model, TS, 2001).unwrap();
    let mr_d = c2d_zoh(&reference_model(0.25, 1.0).unwrap(), TS).unwrap();
    let mr_tf = mr_d.to_tf().unwrap();

    let spec = DesignSpec {
        method: MethodSpec::Posreal {
            samples: None,
            epsilon: EpsilonMode::Override(1e-4),
        },
        m: 100,
        gamma: GammaMode::Free,
        rho0: Rho0Mode::Auto,
        rho: 1.0,
    };
    let (ctrl, report) =
        design_from_data(&u, &y, &mr_tf, &spec, &SolveOptions::with_tol(1e-6), None).unwrap();
    assert!(
        report.certified(),
        "design must certify, margin {}",
        report.margin
    );

    let n = 400; // 20 s
    let r = step_signal(n, TS).unwrap();
    let y_ref = mr_d.simulate(&r).unwrap();
    let TwoCartModel::Linear(ss) = &model else {
        panic!()
    };
    let plant = LoopPlant::Discrete(c2d_zoh(ss, TS).unwrap());

    let rms = |a: &[f64]| -> f64 {
        (a.iter()
            .zip(y_ref.values())
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            / a.len() as f64)
            .sqrt()
    };

    let (y_ifir, _) = closed_loop_sim(&plant, &LoopController::Ifir(ctrl), &r).unwrap();
    let [kp, kd, ki] = PID_GAINS_MR1;
    let (y_pid, _) = closed_loop_sim(
        &plant,
        &LoopController::Tf(pid_controller(kp, kd, ki, TS).unwrap()),
        &r,
    )
    .unwrap();
    let (y_pid_swapped, _) = closed_loop_sim(
        &plant,
        &LoopController::Tf(pid_controller_role_swapped(kp, kd, ki, TS).unwrap()),
        &r,
    )
    .unwrap();

    let rms_ifir = rms(y_ifir.values());
    let rms_pid = rms(y_pid.values());
    let rms_pid_swapped = rms(y_pid_swapped.values());
    let elapsed = t_all.elapsed().as_secs_f64();
    let ok = rms_ifir < rms_pid && elapsed < 300.0;
    println!(
        "{} two-cart tracking: rms ifir={rms_ifir:.5} < pid(printed)={rms_pid:.5}; \
         pid(role-swapped)={rms_pid_swapped:.3e} (reported, not asserted); {elapsed:.1}s",
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(rms_ifir < rms_pid);
    assert!(elapsed < 300.0, "end-to-end took {elapsed:.1} s");
}

/// Nonlinear two-cart with the T = 1 s reference: bounded response and
/// regulation to 1 within 1e-2 at t = 100 s.
#[test]
fn nonlinear_two_cart_regulation() {
    let model = two_cart(TwoCartParams::nominal_piecewise()).unwrap();
    let (u, y) = two_cart_probe_data(&model, TS, 2001).unwrap();
    let mr_tf = c2d_zoh(&reference_model(1.0, 1.0).unwrap(), TS)
        .unwrap()
        .to_tf()
        .unwrap();
    let spec = DesignSpec {
        method: MethodSpec::Posreal {
            samples: None,
            epsilon: EpsilonMode::Override(1e-4),
        },
        m: 100,
        gamma: GammaMode::Free,
        rho0: Rho0Mode::Auto,
        rho: 1.0,
    };
    let (ctrl, report) =
        design_from_data(&u, &y, &mr_tf, &spec, &SolveOptions::with_tol(1e-6), None).unwrap();
    assert!(
        report.certified(),
        "design must certify, margin {}",
        report.margin
    );

    let TwoCartModel::Nonlinear(plant) = model else {
        panic!()
    };
    let n = 2000; // 100 s
    let r = step_signal(n, TS).unwrap();
    let (y_cl, _) = closed_loop_sim(
        &LoopPlant::Nonlinear(plant),
        &LoopController::Ifir(ctrl),
        &r,
    )
    .unwrap();
    let peak = y_cl.values().iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    let final_err = (y_cl.values()[n - 1] - 1.0).abs();
    let ok = peak <= 10.0 && final_err <= 1e-2;
    println!(
        "{} nonlinear regulation: |y|max={peak:.3} final error={final_err:.2e}",
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(peak <= 10.0);
    assert!(final_err <= 1e-2);
}

/// Median solve-time ordering at m = 150 on identical data:
/// posreal (M = m) < toeplitz (n = m) < KYP, three repeats each.
#[test]
fn solve_time_ordering_by_method() {
    let _guard = TIMING_LOCK.lock().unwrap();
    use ifir::bench::{run_bench, BenchMethod};
    let model = two_cart(TwoCartParams::nominal()).unwrap();
    let (u, y) = two_cart_probe_data(&model, TS, 2001).unwrap();
    let mr = c2d_zoh(&reference_model(0.25, 1.0).unwrap(), TS)
        .unwrap()
        .to_tf()
        .unwrap();
    let opts = SolveOptions {
        max_iters: 4000,
        ..SolveOptions::with_tol(1e-5)
    };
    let rows = run_bench(
        &u,
        &y,
        &mr,
        &[150],
        &[
            BenchMethod::Posreal,
            BenchMethod::Toeplitz,
            BenchMethod::Kyp,
        ],
        3,
        &opts,
    )
    .unwrap();
    let time_of = |m: BenchMethod| {
        rows.iter()
            .find(|r| r.method == m)
            .map(|r| r.median_solve_seconds())
            .unwrap()
    };
    let t_pos = time_of(BenchMethod::Posreal);
    let t_toe = time_of(BenchMethod::Toeplitz);
    let t_kyp = time_of(BenchMethod::Kyp);
    let ok = t_pos < t_toe && t_toe < t_kyp;
    println!(
        "{} solve-time ordering at m=150: posreal {t_pos:.3}s < toeplitz {t_toe:.3}s < kyp {t_kyp:.3}s",
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(ok, "posreal {t_pos}, toeplitz {t_toe}, kyp {t_kyp}");
}
