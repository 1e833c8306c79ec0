//! `crl`: solve, design, simulate, sweep and probe content routing games.

mod commands;
mod config;
mod error;
mod sweep;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use content_routing::poa::Designer;

use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "crl", version, about = "Content routing game toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Run configuration (JSON, or TOML by extension).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Designer(s) to run: none, side, restriction, combined. Repeatable or comma separated.
    #[arg(long, global = true, value_delimiter = ',', value_parser = parse_designer)]
    pub designer: Vec<Designer>,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Directory for output files; created if missing.
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    /// Overrides `design.eps_mech`.
    #[arg(long, global = true)]
    pub eps_mech: Option<f64>,
    /// Overrides `design.grid_step`.
    #[arg(long, global = true)]
    pub grid_step: Option<f64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Social optimum and the equilibrium without (or under a given) mechanism.
    Solve,
    /// Run designers and check their targets.
    Design {
        /// Include the per-case optima of the combined designer.
        #[arg(long)]
        debug_cases: bool,
    },
    /// Integrate the flow dynamics and write the trajectory as CSV.
    Dynamics,
    /// Welfare ratios over a parameter grid, as CSV.
    Sweep,
    /// Worst designed-to-optimal ratio over random instances.
    PoaProbe,
    /// Stationary table of the repeated model with discounted pools.
    DynamicModel,
}

fn parse_designer(s: &str) -> Result<Designer, String> {
    s.parse::<Designer>().map_err(|_| format!("unknown designer `{s}` (none|side|restriction|combined)"))
}

fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = match &cli.common.config {
        Some(p) => config::Config::load(p)?,
        None => config::Config::empty(),
    };
    if let Some(dir) = &cli.common.out_dir {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("cannot create {}: {e}", dir.display())))?;
    }
    let c = &cli.common;
    match cli.command {
        Command::Solve => commands::solve(&cfg, c),
        Command::Design { debug_cases } => commands::design(&cfg, c, debug_cases),
        Command::Dynamics => commands::dynamics(&cfg, c),
        Command::Sweep => sweep::run(&cfg, c),
        Command::PoaProbe => commands::poa_probe(&cfg, c),
        Command::DynamicModel => commands::dynamic_model(&cfg, c),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let err = CliError::Config(e.render().to_string().trim().to_string());
            eprintln!("{}", err.to_json());
            return ExitCode::from(err.exit_code() as u8);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
