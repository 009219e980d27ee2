use std::fs;
use std::io;
use std::path::PathBuf;
use std::process::ExitCode;

use chauffeur_cli::{execute, parse_config, CliError, Command};
use clap::{Parser, Subcommand};

/// Homicidal chauffeur game: solution geometry, closed-loop runs and
/// speed-deception sweeps.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Write barrier, equivocal curve and characteristic fans as CSV.
    Geometry(Args),
    /// Print the region of the initial point under mu1, then mu2.
    Classify(Args),
    /// Run one closed-loop game and write its trajectory.
    Simulate(Args),
    /// Evaluate the deception gain over a lattice of initial points.
    Sweep(Args),
    /// Run the command named by the config's `command` key.
    Run(Args),
}

#[derive(clap::Args)]
struct Args {
    /// TOML run configuration.
    #[arg(short, long)]
    config: PathBuf,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let (args, cmd) = match cli.command {
        Cmd::Geometry(a) => (a, Some(Command::Geometry)),
        Cmd::Classify(a) => (a, Some(Command::Classify)),
        Cmd::Simulate(a) => (a, Some(Command::Simulate)),
        Cmd::Sweep(a) => (a, Some(Command::Sweep)),
        Cmd::Run(a) => (a, None),
    };
    let text = fs::read_to_string(&args.config).map_err(|e| CliError::Io {
        path: args.config.clone(),
        source: e,
    })?;
    let cfg = parse_config(&text)?;
    let cmd = cmd.or(cfg.command).ok_or_else(|| {
        CliError::Config("no command given and config has no `command` key".into())
    })?;
    execute(&cfg, cmd, &mut io::stdout().lock())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
