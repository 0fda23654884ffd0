//! Configuration, orchestration and output for the `landau` command.

pub mod commands;
pub mod config;
pub mod output;

use std::path::PathBuf;

use commands::{run_command, Command, Outcome, EXIT_CONFIG};
use config::{read_config_text, RunConfig};

/// Command-line invocation after flag parsing.
#[derive(Debug, Clone, PartialEq)]
pub struct Invocation {
    pub command: Command,
    pub config: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
    pub verbose: bool,
}

/// Resolves the configuration (file, then flags) and runs the command on a
/// thread pool of the requested size.
pub fn execute(inv: &Invocation) -> Outcome {
    let cfg = match resolve(inv) {
        Ok(c) => c,
        Err(e) => return Outcome { code: EXIT_CONFIG, summary: vec![format!("configuration error: {e}")] },
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cfg.threads).build() {
        Ok(p) => p,
        Err(e) => return Outcome { code: EXIT_CONFIG, summary: vec![format!("cannot build thread pool: {e}")] },
    };
    pool.install(|| run_command(inv.command, &cfg))
}

pub fn resolve(inv: &Invocation) -> Result<RunConfig, config::ConfigError> {
    let text = match &inv.config {
        Some(p) => read_config_text(p)?,
        None => String::new(),
    };
    let mut overrides: Vec<(&str, String)> = Vec::new();
    if let Some(o) = &inv.out {
        overrides.push(("run.out", o.display().to_string()));
    }
    if let Some(t) = inv.threads {
        overrides.push(("run.threads", t.to_string()));
    }
    if inv.verbose {
        overrides.push(("run.verbose", "true".into()));
    }
    RunConfig::from_str_with(&text, &overrides)
}
