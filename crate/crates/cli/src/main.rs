use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use gdp_cli::commands;
use gdp_cli::{CliError, Resolved};
use gdp_core::maghp::Mode;

#[derive(Parser)]
#[command(name = "drgdp", version, about = "Learning-driven robust ground delay programs")]
struct Cli {
    /// Pipeline config (JSON); relative paths inside resolve against its directory.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides the config output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate schedule, weather, throughput and capacity truth tables.
    Synth,
    /// Select capacity-revealing periods from throughput records.
    Estimate,
    /// Fit one capacity predictor per airport and direction.
    Train,
    /// Forecast capacity distributions over the planning grid.
    Predict,
    /// Solve the ground holding problem.
    Solve {
        #[arg(long, value_parser = parse_mode)]
        mode: Mode,
        /// Uniform ambiguity radius, overriding `solve.radii`.
        #[arg(long)]
        eps: Option<f64>,
        /// Also write the model in LP format to `solve/<mode>/model.lp`.
        #[arg(long)]
        export_lp: bool,
    },
    /// Out-of-sample sweep over capacity reductions and radii.
    Sensitivity,
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    s.parse().map_err(|e: gdp_core::Error| e.to_string())
}

fn run(cli: Cli) -> Result<(), CliError> {
    let res = Resolved::load(cli.config.as_deref(), cli.seed, cli.out.as_deref())?;
    match cli.command {
        Command::Synth => commands::cmd_synth(&res),
        Command::Estimate => commands::cmd_estimate(&res),
        Command::Train => commands::cmd_train(&res),
        Command::Predict => commands::cmd_predict(&res),
        Command::Solve { mode, eps, export_lp } => commands::cmd_solve(&res, mode, eps, export_lp),
        Command::Sensitivity => commands::cmd_sensitivity(&res).map(|_| ()),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code as u8)
        }
    }
}
