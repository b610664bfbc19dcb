//! `ifir`: design, verify, simulate and benchmark passive iFIR controllers
//! from open-loop data.

mod commands;
mod config;
mod dataio;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "ifir",
    about = "Passivity-certified iFIR controller design from open-loop data",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a passive iFIR controller to a data CSV using a design config.
    Design {
        /// Data CSV with header t,u,y on a uniform time grid.
        #[arg(long)]
        data: PathBuf,
        /// key=value design configuration.
        #[arg(long)]
        config: PathBuf,
        /// Output controller file (a plain-text report lands next to it).
        #[arg(long)]
        out: PathBuf,
    },
    /// Check a controller file for passivity.
    Verify {
        #[arg(long)]
        controller: PathBuf,
        /// Frequency-grid resolution for the margin scan.
        #[arg(long, default_value_t = 100_000)]
        grid: usize,
    },
    /// Simulate the closed loop of a controller with a built-in or tf plant.
    Simulate {
        /// two-cart | two-cart-nl | tf:`<num coeffs>/<den coeffs>` (powers of z^-1).
        #[arg(long)]
        plant: String,
        #[arg(long)]
        controller: PathBuf,
        /// step | csv:`<path>` (header t,r).
        #[arg(long = "ref", default_value = "step")]
        reference: String,
        /// Number of samples (defaults to 400 for a step reference).
        #[arg(long)]
        horizon: Option<usize>,
        /// Output trajectory CSV (t,r,u,y).
        #[arg(long)]
        out: PathBuf,
        /// Optional design config; its reference model is used to print the
        /// RMS tracking error.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Time the three formulations on identical data.
    Bench {
        /// Comma-separated FIR orders, e.g. 50,150.
        #[arg(long)]
        orders: String,
        /// Comma-separated subset of kyp,toeplitz,posreal, or "all".
        #[arg(long, default_value = "all")]
        methods: String,
        #[arg(long)]
        data: PathBuf,
        /// Solve repetitions per cell (median is reported).
        #[arg(long, default_value_t = 3)]
        repeat: usize,
        /// Optional CSV output path.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Optional design config supplying the reference model and solver
        /// settings.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Generate probe data CSVs for the built-in example plants.
    GenData {
        /// two-cart | two-cart-nl | target:<1|2|3>.
        #[arg(long)]
        plant: String,
        /// Number of samples.
        #[arg(long, default_value_t = 2001)]
        n: usize,
        /// Sampling period in seconds.
        #[arg(long, default_value_t = 0.05)]
        ts: f64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Design { data, config, out } => commands::cmd_design(data, config, out),
        Command::Verify { controller, grid } => commands::cmd_verify(controller, *grid),
        Command::Simulate {
            plant,
            controller,
            reference,
            horizon,
            out,
            config,
        } => commands::cmd_simulate(
            plant,
            controller,
            reference,
            *horizon,
            out,
            config.as_deref(),
        ),
        Command::Bench {
            orders,
            methods,
            data,
            repeat,
            out,
            config,
        } => commands::cmd_bench(
            data,
            orders,
            methods,
            *repeat,
            out.as_deref(),
            config.as_deref(),
        ),
        Command::GenData { plant, n, ts, out } => commands::cmd_gen_data(plant, *n, *ts, out),
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code as u8)
        }
    }
}
