use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hsqkd_cli::commands::{self, Options};
use hsqkd_cli::{CliError, ExperimentConfig};

#[derive(Parser)]
#[command(name = "hsqkd", version, about = "Key rates of BB84 with multiplexed heralded photon sources")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Experiment config (repeatable)
    #[arg(long = "config", global = true)]
    configs: Vec<PathBuf>,

    /// Output directory [default: out]
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Monte Carlo seed, overrides mc.seed
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Also write SVG plots
    #[arg(long, global = true)]
    svg: bool,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Optimized rate against loss, one CSV per config
    Sweep,
    /// Optimized rate against loss for one config, printed to stdout
    Optimize,
    /// Compare Monte Carlo and analytic photon statistics
    ValidateMc,
    /// One rate column per config on a shared loss grid
    Compare,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let configs = cli.configs.iter().map(|p| ExperimentConfig::load(p)).collect::<Result<Vec<_>, _>>()?;
    let opts = Options { out: cli.out, seed: cli.seed, svg: cli.svg };
    let mut warnings = Vec::new();
    let result = match cli.command {
        Command::Sweep => commands::run_sweep(&configs, &opts, &mut warnings).map(|files| {
            for f in files {
                println!("wrote {}", f.display());
            }
        }),
        Command::Optimize => {
            let [config] = configs.as_slice() else {
                return Err(CliError::Config(format!("optimize takes exactly one config, got {}", configs.len())));
            };
            commands::run_optimize(config, &mut warnings).map(|csv| print!("{csv}"))
        }
        Command::Compare => commands::run_compare(&configs, &opts, &mut warnings).map(|files| {
            for f in files {
                println!("wrote {}", f.display());
            }
        }),
        Command::ValidateMc => {
            if configs.is_empty() {
                return Err(CliError::Config("no config given".into()));
            }
            let mut failed = Vec::new();
            for config in &configs {
                let report = commands::run_validate_mc(config, &opts)?;
                print!("{}", report.text);
                commands::save_mc_report(config, &report, &opts)?;
                if !report.passed {
                    failed.push(config.name.clone());
                }
            }
            if failed.is_empty() {
                Ok(())
            } else {
                Err(CliError::Validation(failed.join(", ")))
            }
        }
    };
    for w in warnings {
        eprintln!("warning: {w}");
    }
    result
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
