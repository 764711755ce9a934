//! `asmc` command-line front end.
//!
//! Exit codes: 0 success, 1 a verification check failed or I/O trouble,
//! 2 invalid scenario, 3 numerical blow-up.

mod commands;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "asmc",
    version,
    about = "Adaptive sliding-mode control simulation harness"
)]
struct Cli {
    /// Significant digits for floats in CSV output.
    #[arg(long, global = true, env = "ASMC_CSV_PRECISION", default_value_t = asmc::sim::CSV_SIGNIFICANT_DIGITS)]
    precision: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one scenario and write its trajectory CSV and metrics
    Run {
        /// Scenario file, or the name of a bundled preset
        scenario: String,
        /// Output directory (default: the file's [output] dir, else the current directory)
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the controller sample period
        #[arg(long)]
        dt: Option<f64>,
        /// Override the horizon
        #[arg(long = "t-end")]
        t_end: Option<f64>,
    },
    /// Run several scenarios on the same plant and disturbance side by side
    Compare {
        /// Scenario files or preset names (at least two)
        #[arg(required = true, num_args = 2..)]
        scenarios: Vec<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check the closed-form bounds of the adaptive law against a simulation
    Verify {
        scenario: String,
        /// Ultimate level b for the reach bound (default: midpoint of (sigma/k, V'0))
        #[arg(long)]
        b: Option<f64>,
    },
    /// Bundled scenario presets
    Presets {
        #[command(subcommand)]
        action: PresetAction,
    },
}

#[derive(Subcommand)]
enum PresetAction {
    /// List preset names with their descriptions
    List,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            scenario,
            out,
            dt,
            t_end,
        } => commands::run(&scenario, out, dt, t_end, cli.precision),
        Command::Compare { scenarios, out } => commands::compare(&scenarios, &out, cli.precision),
        Command::Verify { scenario, b } => commands::verify(&scenario, b),
        Command::Presets {
            action: PresetAction::List,
        } => commands::list_presets(),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(commands::exit_code(&e))
        }
    }
}
