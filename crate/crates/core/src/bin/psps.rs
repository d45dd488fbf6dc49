//! Command-line interface for shutoff-aware infrastructure planning.
//!
//! Exit codes: 0 on success, 2 for configuration or input problems,
//! 3 for solver failures, 4 for output I/O errors.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use psps_core::config::{CliOverrides, RunConfig, SolverMode};
use psps_core::pipeline::{cmd_plan, cmd_simulate, cmd_sweep, cmd_validate, PipelineError};

#[derive(Parser)]
#[command(
    name = "psps",
    about = "Site wildfire-mitigation investments jointly with public-safety power shutoffs",
    version,
    arg_required_else_help = true
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML run configuration.
    #[arg(long, global = true, default_value = "config.toml")]
    config: PathBuf,
    /// Shed-versus-risk objective weight in (0, 1); overrides the config.
    #[arg(long, global = true)]
    alpha: Option<f64>,
    /// Investment budget in million dollars; overrides the config.
    #[arg(long, global = true)]
    budget: Option<f64>,
    /// Investment scenario id (1-8); overrides the config.
    #[arg(long, global = true)]
    scenario: Option<u8>,
    /// Relative optimality gap at which solves stop (0 = exact).
    #[arg(long, global = true)]
    gap: Option<f64>,
    /// Reserve-reward weight used when replaying shutoff days.
    #[arg(long, global = true)]
    gamma: Option<f64>,
    /// Recorded in outputs for reproducibility bookkeeping.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for sweeps.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// "builtin" solves in-process; "export" writes model files instead.
    #[arg(long, global = true)]
    solver: Option<String>,
    /// Output directory; beats the config and the PSPS_OUT_DIR variable.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Load every configured input, check invariants, and report sizes.
    Validate,
    /// Optimize placement and sizing for one budget and weight.
    Plan,
    /// Replay a saved plan over the evaluation season day by day.
    Simulate {
        /// Plan file to replay; defaults to plan.json in the output dir.
        #[arg(long)]
        plan: Option<PathBuf>,
    },
    /// Run the configured scenario x budget x weight grid.
    Sweep,
}

fn overrides(common: &Common) -> Result<CliOverrides, PipelineError> {
    let solver = match &common.solver {
        None => None,
        Some(text) => Some(
            SolverMode::parse(text)
                .map_err(|e| PipelineError::Config(e.to_string()))?,
        ),
    };
    Ok(CliOverrides {
        alpha: common.alpha,
        budget_musd: common.budget,
        scenario: common.scenario,
        gap: common.gap,
        gamma: common.gamma,
        seed: common.seed,
        workers: common.workers,
        solver,
        out: common.out.clone(),
    })
}

fn run(cli: &Cli) -> Result<String, PipelineError> {
    let config = RunConfig::load(&cli.common.config, &overrides(&cli.common)?)?;
    match &cli.command {
        Command::Validate => cmd_validate(&config),
        Command::Plan => cmd_plan(&config),
        Command::Simulate { plan } => {
            let path = plan
                .clone()
                .unwrap_or_else(|| config.effective_out_dir().join("plan.json"));
            cmd_simulate(&config, &path)
        }
        Command::Sweep => cmd_sweep(&config),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(report) => {
            print!("{report}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
