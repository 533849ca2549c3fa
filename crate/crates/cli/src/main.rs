//! `topograd` command-line front end.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical failure (including
//! failed validation criteria), 1 for anything else such as i/o.

mod commands;

use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;
use topograd::config::RunConfig;
use topograd::Error;

#[derive(Debug, Parser)]
#[command(
    name = "topograd",
    version,
    about = "Topological derivatives of semilinear transmission problems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Run configuration (TOML).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Output directory; overrides `outputs.directory`.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Worker threads; defaults to the hardware thread count.
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,

    /// Single-threaded run with bit-identical outputs.
    #[arg(long, global = true)]
    deterministic: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve the state and adjoint equations.
    Solve,
    /// Evaluate the topological derivative at the configured points or grid.
    Td,
    /// Compute the polarisation matrix and its truncation study.
    Polmatrix,
    /// Run numerical checks: fd, rates, identity, qvar, dlg or all.
    Validate { which: String },
    /// Write the unperturbed mesh.
    MeshExport,
}

enum Failure {
    Config(String),
    Numerical(String),
    Other(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Io { .. } => Failure::Other(e.to_string()),
            e if e.is_config() => Failure::Config(e.to_string()),
            e => Failure::Numerical(e.to_string()),
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let path = cli
        .config
        .ok_or_else(|| Failure::Config("--config PATH is required".into()))?;
    let mut config = RunConfig::load(&path)?;
    if let Some(out) = cli.out {
        config.outputs.directory = out;
    }
    let threads = if cli.deterministic {
        Some(1)
    } else {
        cli.threads
    };
    if let Some(n) = threads {
        if n == 0 {
            return Err(Failure::Config("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Other(e.to_string()))?;
    }
    log::info!("config {} (hash {})", path.display(), config.hash());
    match cli.command {
        Command::Solve => commands::solve(&config)?,
        Command::Td => commands::td(&config)?,
        Command::Polmatrix => commands::polmatrix(&config)?,
        Command::MeshExport => commands::mesh_export(&config)?,
        Command::Validate { which } => {
            let which = which.parse()?;
            if !commands::validate(&config, which)? {
                return Err(Failure::Numerical("validation criteria failed".into()));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("TOPOGRAD_LOG", "warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
        Err(Failure::Other(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
