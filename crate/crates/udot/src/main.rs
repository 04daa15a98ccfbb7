//! Command-line front end for the transport solver.
//!
//! Four commands share one configuration surface: an optional JSON config
//! file plus flags that override its fields one-to-one. `solve` marches the
//! dual potential and writes `solution.csv`, `levelsets.csv`, `report.json`;
//! `diagnose` probes the surplus model and curve topology without solving;
//! `verify` re-checks a finished solve against sampled pushforward,
//! conjugacy, Jacobian, and exact discrete-optimum tests; `oracle` solves
//! the discretized instance exactly and writes `coupling.csv`.
//!
//! Exit codes: 0 success, 2 configuration error, 3 computation failure
//! (partial outputs are still written), 4 verification threshold violated.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::{Overrides, RunConfig};

#[derive(Parser)]
#[command(
    name = "udot",
    version,
    about = "Transport a planar density onto a line by marching the dual potential"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// March the potential; writes solution.csv, levelsets.csv, report.json.
    Solve(RunArgs),
    /// Scan surplus margins and curve topology without solving.
    Diagnose(RunArgs),
    /// Re-check an existing solve; appends a verification block to report.json.
    Verify(RunArgs),
    /// Solve the discretized instance exactly; writes coupling.csv.
    Oracle(RunArgs),
}

#[derive(Args, Clone, Debug, Default)]
struct RunArgs {
    /// JSON config file; the flags below override its fields one-to-one.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Problem preset: annulus | strip | tilted.
    #[arg(long)]
    preset: Option<String>,
    /// Output directory (default: out).
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Seed for all sampled diagnostics.
    #[arg(long)]
    seed: Option<u64>,
    /// Curve-tracing grid resolution per axis.
    #[arg(long)]
    cells: Option<usize>,
    /// Runge–Kutta intervals across the target.
    #[arg(long)]
    ode_steps: Option<usize>,
    /// Source atom grid resolution for the discrete reference (nx × nx cells).
    #[arg(long)]
    oracle_nx: Option<usize>,
    /// Target atom count for the discrete reference.
    #[arg(long)]
    oracle_ny: Option<usize>,
    /// Pushforward sample count for verification.
    #[arg(long)]
    samples: Option<usize>,
    /// Histogram bins for the pushforward check.
    #[arg(long)]
    bins: Option<usize>,
    /// Sample count for the map Jacobian check.
    #[arg(long)]
    jacobian_samples: Option<usize>,
    /// Sample count for the global conjugacy check.
    #[arg(long)]
    nonlocal_samples: Option<usize>,
    /// Number of target nodes whose level sets go into levelsets.csv.
    #[arg(long)]
    levelset_count: Option<usize>,
    /// Diagnostic lattice resolution in the target coordinate.
    #[arg(long)]
    diag_y: Option<usize>,
    /// Diagnostic lattice resolution in the slope coordinate.
    #[arg(long)]
    diag_p: Option<usize>,
    /// Diagnostic lattice resolution in the curvature coordinate.
    #[arg(long)]
    diag_q: Option<usize>,
    /// Boundary handling: initial | nested | periodic-shooting.
    /// Must match the preset's target topology.
    #[arg(long)]
    bc_mode: Option<String>,
    /// Left-endpoint slope for --bc-mode initial.
    #[arg(long)]
    initial_slope: Option<f64>,
    /// Coefficient c of the convexifying term c·y²/2 added to the surplus;
    /// outputs are mapped back to the original frame.
    #[arg(long = "convexify")]
    convexify_coefficient: Option<f64>,
}

impl RunArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            config: self.config.clone(),
            preset: self.preset.clone(),
            out: self.out.clone(),
            seed: self.seed,
            cells: self.cells,
            ode_steps: self.ode_steps,
            oracle_nx: self.oracle_nx,
            oracle_ny: self.oracle_ny,
            samples: self.samples,
            bins: self.bins,
            jacobian_samples: self.jacobian_samples,
            nonlocal_samples: self.nonlocal_samples,
            levelset_count: self.levelset_count,
            diag_y: self.diag_y,
            diag_p: self.diag_p,
            diag_q: self.diag_q,
            bc_mode: self.bc_mode.clone(),
            initial_slope: self.initial_slope,
            convexify_coefficient: self.convexify_coefficient,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (args, run): (&RunArgs, fn(&RunConfig) -> u8) = match &cli.command {
        Command::Solve(a) => (a, commands::cmd_solve),
        Command::Diagnose(a) => (a, commands::cmd_diagnose),
        Command::Verify(a) => (a, commands::cmd_verify),
        Command::Oracle(a) => (a, commands::cmd_oracle),
    };
    let cfg = match RunConfig::resolve(&args.overrides()) {
        Ok(cfg) => cfg,
        Err(msg) => {
            eprintln!("udot: config error: {msg}");
            return ExitCode::from(commands::EXIT_CONFIG);
        }
    };
    ExitCode::from(run(&cfg))
}
