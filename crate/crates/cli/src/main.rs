use std::io;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{CommandFactory, Parser, Subcommand};
use ruin_cli::{commands, CliError};

/// Ultimate ruin probabilities for the bi-seasonal discrete-time risk model.
#[derive(Parser)]
#[command(name = "ruin", version, about, long_about = None)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute ψ(0..=u_max) for a model config and write it as CSV
    Compute {
        /// JSON run config
        #[arg(long)]
        config: PathBuf,
        /// CSV destination; overrides output.path in the config
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write an SVG plot next to the CSV
        #[arg(long)]
        svg: bool,
    },
    /// Recompute one of the four published tables and compare cell by cell
    Reproduce {
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=4))]
        table: u8,
        /// Write a plot of the three computed columns
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Compare the engine with finite-horizon DP and Monte Carlo
    Oracle {
        #[arg(long)]
        config: PathBuf,
        /// Horizon in claim pairs
        #[arg(long)]
        pairs: usize,
        /// Monte Carlo paths per initial capital
        #[arg(long)]
        paths: u64,
        #[arg(long)]
        seed: u64,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut stdout = io::stdout().lock();
    match cli.command {
        Command::Compute { config, out, svg } => {
            commands::compute(&config, out.as_deref(), svg, &mut stdout)
        }
        Command::Reproduce { table, svg } => {
            commands::reproduce(table, svg.as_deref(), &mut stdout)
        }
        Command::Oracle {
            config,
            pairs,
            paths,
            seed,
        } => commands::oracle(&config, pairs, paths, seed, &mut stdout),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // Value errors (e.g. `--table 5`) omit the usage line that argument errors carry.
            if e.use_stderr() && !e.to_string().contains("Usage:") {
                eprintln!("\n{}", Cli::command().render_usage());
            }
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
