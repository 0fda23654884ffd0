use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use landau_cli::commands::Command;
use landau_cli::config::keys_help;
use landau_cli::{execute, Invocation};

/// Spectral final-data solver for Vlasov-Poisson type equations on the torus.
#[derive(Parser, Debug)]
#[command(name = "landau", version, after_help = keys_help())]
struct Cli {
    /// penrose | kernel | damp | scatter | roundtrip | poisson | selftest
    command: Command,
    /// Configuration file (`key = value` lines)
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (overrides run.out)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (overrides run.threads)
    #[arg(long)]
    threads: Option<usize>,
    /// Progress messages on stderr
    #[arg(long)]
    verbose: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let inv = Invocation { command: cli.command, config: cli.config, out: cli.out, threads: cli.threads, verbose: cli.verbose };
    let outcome = execute(&inv);
    for line in &outcome.summary {
        println!("{line}");
    }
    ExitCode::from(outcome.code as u8)
}
