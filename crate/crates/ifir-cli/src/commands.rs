//! Command implementations. Every command returns the process exit code:
//! 0 success/certified, 2 input error, 3 solver non-convergence,
//! 4 certification failure.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use ifir::bench::{run_bench, BenchMethod, BenchRow, ALL_METHODS};
use ifir::design::{design_from_regressors, DesignReport};
use ifir::lti::c2d_zoh;
use ifir::passivity::{passivity_margin, toeplitz_min_eig, ConstraintMethod, MARGIN_TOL};
use ifir::plants::{
    closed_loop_sim, reference_model, two_cart, two_cart_probe_data, LoopController, LoopPlant,
    TwoCartModel, TwoCartParams,
};
use ifir::signal::step_signal;
use ifir::solver::SolveStatus;
use ifir::vrft::{assemble_problem, virtual_error_filtered};
use ifir::{DiscreteTransferFunction, Error, SampledSignal};

use crate::config::DesignConfig;
use crate::dataio;

pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn input(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::NumericFailure(_) => 3,
            _ => 2,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

type CmdResult = Result<i32, CliError>;

fn check_ts(config: f64, data: f64) -> Result<(), CliError> {
    if (config - data).abs() > 1e-9 * config.abs().max(data.abs()) {
        return Err(CliError::input(format!(
            "config ts={config} does not match data ts={data}"
        )));
    }
    Ok(())
}

fn format_report(report: &DesignReport) -> String {
    let mut out = String::new();
    let method = match &report.method {
        ConstraintMethod::Kyp => "kyp".to_string(),
        ConstraintMethod::Toeplitz { n, epsilon } => {
            format!("toeplitz (n={n}, epsilon={epsilon:.3e})")
        }
        ConstraintMethod::Posreal {
            samples,
            epsilon,
            auto_epsilon,
        } => format!(
            "posreal (M={samples}, epsilon={epsilon:.3e}{})",
            if *auto_epsilon { ", auto" } else { "" }
        ),
    };
    let _ = writeln!(out, "method:                  {method}");
    let _ = writeln!(out, "order m:                 {}", report.m);
    let _ = writeln!(out, "gamma mode:              {:?}", report.gamma_mode);
    let _ = writeln!(
        out,
        "decay bounds:            rho0={:.6e}, rho={}",
        report.rho0, report.rho
    );
    let _ = writeln!(out, "objective:               {:.12e}", report.objective);
    let _ = writeln!(
        out,
        "unconstrained objective: {:.12e}",
        report.unconstrained_objective
    );
    let _ = writeln!(
        out,
        "fit residual:            {:.6e}",
        report.objective.max(0.0).sqrt()
    );
    let _ = writeln!(out, "passivity margin:        {:.6e}", report.margin);
    let _ = writeln!(out, "solver status:           {:?}", report.status);
    let _ = writeln!(out, "iterations:              {}", report.iterations);
    let _ = writeln!(
        out,
        "primal residual:         {:.3e}",
        report.primal_residual
    );
    let _ = writeln!(out, "dual residual:           {:.3e}", report.dual_residual);
    let _ = writeln!(
        out,
        "assembly time:           {:.3} s",
        report.assembly_time.as_secs_f64()
    );
    let _ = writeln!(
        out,
        "solve time:              {:.3} s",
        report.solve_time.as_secs_f64()
    );
    let _ = writeln!(
        out,
        "linear inequalities:     {}",
        report.linear_constraints
    );
    let _ = writeln!(out, "psd blocks:              {:?}", report.psd_block_sizes);
    let _ = writeln!(out, "attempts:                {}", report.attempts);
    let _ = writeln!(
        out,
        "constraint check:        {} (max linear violation {:.3e}, psd min eigs {:?})",
        if report.check.pass { "pass" } else { "FAIL" },
        report.check.max_linear_violation,
        report.check.psd_min_eigs
    );
    let _ = writeln!(out, "certified:               {}", report.certified());
    out
}

pub fn cmd_design(data: &Path, config: &Path, out: &Path) -> CmdResult {
    let (u, y) = dataio::read_data_csv(data)?;
    let cfg = DesignConfig::load(config)?;
    check_ts(cfg.ts, u.ts())?;

    let rs = match cfg.reference_tf()? {
        Some(mr) => {
            let (u_f, e_f) = virtual_error_filtered(&u, &y, &mr)?;
            assemble_problem(&u_f, &e_f, cfg.spec.m, cfg.spec.gamma)?
        }
        // no reference model: the columns are already the regressor pair
        None => assemble_problem(&u, &y, cfg.spec.m, cfg.spec.gamma)?,
    };
    let (controller, report) = design_from_regressors(&rs, &cfg.spec, &cfg.solve)?;

    dataio::write_controller(out, &controller)?;
    let text = format_report(&report);
    print!("{text}");
    let report_path = {
        let mut p = out.as_os_str().to_owned();
        p.push(".report");
        PathBuf::from(p)
    };
    std::fs::write(&report_path, &text).map_err(Error::from)?;
    println!("controller written to {}", out.display());
    println!("report written to {}", report_path.display());

    if report.status == SolveStatus::MaxIters {
        return Ok(3);
    }
    if !report.certified() {
        return Ok(4);
    }
    Ok(0)
}

pub fn cmd_verify(controller: &Path, grid: usize) -> CmdResult {
    let c = dataio::read_controller(controller)?;
    let grid = grid.max(1000);
    let margin = passivity_margin(c.g(), grid)?;
    let gamma_ok = c.gamma() >= 0.0;
    println!(
        "controller:       {} (m={}, ts={})",
        controller.display(),
        c.order(),
        c.ts()
    );
    println!(
        "gamma:            {:.6e} ({})",
        c.gamma(),
        if gamma_ok { "ok" } else { "NEGATIVE" }
    );
    println!("margin ({grid} pts): {margin:.6e}");
    for factor in [1usize, 2, 4] {
        let n = factor * c.order();
        let eig = toeplitz_min_eig(c.g(), n)?;
        println!("toeplitz min eig (n={n}): {eig:.6e}");
    }
    let certified = gamma_ok && margin >= -MARGIN_TOL;
    println!("certified:        {certified}");
    Ok(if certified { 0 } else { 4 })
}

fn parse_tf_plant(body: &str, ts: f64) -> Result<DiscreteTransferFunction, CliError> {
    let (num, den) = body
        .split_once('/')
        .ok_or_else(|| CliError::input("tf plant must be tf:<num coeffs>/<den coeffs>"))?;
    let parse = |s: &str| -> Result<Vec<f64>, CliError> {
        s.split(',')
            .map(|v| v.trim().parse::<f64>())
            .collect::<Result<Vec<f64>, _>>()
            .map_err(|e| CliError::input(format!("bad tf coefficient: {e}")))
    };
    Ok(DiscreteTransferFunction::new(parse(num)?, parse(den)?, ts)?)
}

pub fn cmd_simulate(
    plant: &str,
    controller: &Path,
    reference: &str,
    horizon: Option<usize>,
    out: &Path,
    config: Option<&Path>,
) -> CmdResult {
    let c = dataio::read_controller(controller)?;
    let ts = c.ts();

    let r = match reference {
        "step" => step_signal(horizon.unwrap_or(400), ts)?,
        other => {
            let path = other
                .strip_prefix("csv:")
                .ok_or_else(|| CliError::input("--ref must be 'step' or 'csv:<path>'"))?;
            let r = read_reference_csv(Path::new(path), ts)?;
            match horizon {
                Some(h) if h < r.len() => SampledSignal::new(r.values()[..h].to_vec(), ts)?,
                _ => r,
            }
        }
    };

    let loop_plant = match plant {
        "two-cart" => {
            let TwoCartModel::Linear(ss) = two_cart(TwoCartParams::nominal())? else {
                unreachable!()
            };
            LoopPlant::Discrete(c2d_zoh(&ss, ts)?)
        }
        "two-cart-nl" => {
            let TwoCartModel::Nonlinear(nl) = two_cart(TwoCartParams::nominal_piecewise())? else {
                unreachable!()
            };
            LoopPlant::Nonlinear(nl)
        }
        other => {
            let body = other.strip_prefix("tf:").ok_or_else(|| {
                CliError::input("--plant must be two-cart, two-cart-nl or tf:<coeffs>")
            })?;
            LoopPlant::Tf(parse_tf_plant(body, ts)?)
        }
    };

    let (y, u) = closed_loop_sim(&loop_plant, &LoopController::Ifir(c), &r)?;
    dataio::write_trajectory_csv(out, ts, r.values(), u.values(), y.values())?;
    println!("trajectory written to {}", out.display());

    if let Some(cfg_path) = config {
        let cfg = DesignConfig::load(cfg_path)?;
        check_ts(cfg.ts, ts)?;
        if let Some(mr) = cfg.reference_tf()? {
            let y_ref = mr.simulate(&r)?;
            let rms = (y
                .values()
                .iter()
                .zip(y_ref.values())
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                / y.len() as f64)
                .sqrt();
            println!("rms tracking error vs reference model: {rms:.6e}");
        }
    }
    Ok(0)
}

fn read_reference_csv(path: &Path, ts: f64) -> Result<SampledSignal, CliError> {
    let text = std::fs::read_to_string(path).map_err(Error::from)?;
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim_end_matches('\r') == "t,r" => {}
        other => {
            return Err(CliError::input(format!(
                "reference CSV needs header 't,r', got {:?}",
                other.unwrap_or("")
            )));
        }
    }
    let mut r = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let (_, rv) = line
            .split_once(',')
            .ok_or_else(|| CliError::input(format!("reference row {}: expected t,r", i + 2)))?;
        r.push(
            rv.trim()
                .parse::<f64>()
                .map_err(|e| CliError::input(format!("reference row {}: {e}", i + 2)))?,
        );
    }
    Ok(SampledSignal::new(r, ts)?)
}

pub fn cmd_bench(
    data: &Path,
    orders: &str,
    methods: &str,
    repeat: usize,
    out: Option<&Path>,
    config: Option<&Path>,
) -> CmdResult {
    let (u, y) = dataio::read_data_csv(data)?;
    let ts = u.ts();
    let orders: Vec<usize> = orders
        .split(',')
        .map(|v| v.trim().parse::<usize>())
        .collect::<Result<_, _>>()
        .map_err(|e| CliError::input(format!("bad order list: {e}")))?;
    let methods: Vec<BenchMethod> = if methods == "all" {
        ALL_METHODS.to_vec()
    } else {
        methods
            .split(',')
            .map(|s| {
                BenchMethod::parse(s.trim())
                    .ok_or_else(|| CliError::input(format!("unknown method '{s}'")))
            })
            .collect::<Result<_, _>>()?
    };

    let (mr, opts) = match config {
        Some(path) => {
            let cfg = DesignConfig::load(path)?;
            check_ts(cfg.ts, ts)?;
            let mr = cfg.reference_tf()?.ok_or_else(|| {
                CliError::input("bench config must define a reference model (mr_num/mr_den)")
            })?;
            (mr, cfg.solve)
        }
        None => {
            // slower built-in reference model, solver capped for timing runs
            let mr = c2d_zoh(&reference_model(0.25, 1.0)?, ts)?.to_tf()?;
            let opts = ifir::solver::SolveOptions {
                abs_tol: 1e-5,
                rel_tol: 1e-5,
                max_iters: 4000,
                ..Default::default()
            };
            (mr, opts)
        }
    };

    let rows = run_bench(&u, &y, &mr, &orders, &methods, repeat, &opts)?;
    print_bench_table(&rows);
    if let Some(path) = out {
        write_bench_csv(path, &rows)?;
        println!("csv written to {}", path.display());
    }
    Ok(0)
}

fn print_bench_table(rows: &[BenchRow]) {
    println!(
        "{:<9} {:>5} {:>12} {:>12} {:>8} {:>10} {:>12} {:>12}  note",
        "method", "m", "assembly[s]", "median[s]", "iters", "status", "objective", "margin"
    );
    for row in rows {
        let status = row
            .status
            .map(|s| format!("{s:?}"))
            .unwrap_or_else(|| "-".into());
        println!(
            "{:<9} {:>5} {:>12.4} {:>12.4} {:>8} {:>10} {:>12.4e} {:>12.4e}  {}",
            row.method.name(),
            row.m,
            row.assembly_seconds,
            row.median_solve_seconds(),
            row.iterations,
            status,
            row.objective,
            row.margin,
            row.error.as_deref().unwrap_or("")
        );
    }
}

fn write_bench_csv(path: &Path, rows: &[BenchRow]) -> Result<(), CliError> {
    let mut out = String::from(
        "method,m,assembly_seconds,median_solve_seconds,iterations,status,objective,margin,error\n",
    );
    for row in rows {
        let status = row.status.map(|s| format!("{s:?}")).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            row.method.name(),
            row.m,
            row.assembly_seconds,
            row.median_solve_seconds(),
            row.iterations,
            status,
            row.objective,
            row.margin,
            row.error.as_deref().unwrap_or("")
        );
    }
    std::fs::write(path, out).map_err(Error::from)?;
    Ok(())
}

pub fn cmd_gen_data(plant: &str, n: usize, ts: f64, out: &Path) -> CmdResult {
    let (u, y) = match plant {
        "two-cart" => {
            let model = two_cart(TwoCartParams::nominal())?;
            two_cart_probe_data(&model, ts, n)?
        }
        "two-cart-nl" => {
            let model = two_cart(TwoCartParams::nominal_piecewise())?;
            two_cart_probe_data(&model, ts, n)?
        }
        other => {
            let q = other
                .strip_prefix("target:")
                .and_then(|v| v.parse::<usize>().ok())
                .ok_or_else(|| {
                    CliError::input("--plant must be two-cart, two-cart-nl or target:<1|2|3>")
                })?;
            // direct fitting pair: u column = filtered target output,
            // y column = probe; design configs omit the reference model
            let (e, u_target) = ifir::plants::target_fit_data(q, n, ts)?;
            (u_target, e)
        }
    };
    dataio::write_data_csv(out, &u, &y)?;
    println!("{} samples written to {}", u.len(), out.display());
    Ok(0)
}
