//! `catlab` experiment harness.
//!
//! Every run command reads an optional TOML config, applies `--a.b=value`
//! overrides, writes CSV tables plus a JSON manifest into the configured
//! output directory and exits 0 (all checks pass), 1 (tolerance breach) or
//! 2 (configuration error).

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

pub mod commands;
pub mod config;
pub mod criteria;
pub mod report;
pub mod table;

use config::ExperimentConfig;

pub const EXIT_OK: i32 = 0;
pub const EXIT_BREACH: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] crate::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("no result tables in {}", .0.display())]
    MissingArtifacts(PathBuf),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use crate::Error as E;
        match self {
            CliError::Core(
                E::NotPsd(_) | E::NoConvergence(_) | E::InvalidState(_) | E::NotHermitian { .. } | E::SimplexViolation(_) | E::UnityDefect(_)
                | E::InvariantViolation(_),
            ) => EXIT_BREACH,
            _ => EXIT_CONFIG,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "catlab", version, about = "Quantum cat map experiments: coherent states, Egorov breaking time, ALF and CNT entropies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Coherent-state axioms and Weyl algebra identities over n_list.
    VerifyAxioms(RunArgs),
    /// Quantization round trips, Egorov residuals and breaking steps.
    Semiclassics(RunArgs),
    /// ALF entropy of the quantized partition against the classical entropy.
    Alf(RunArgs),
    /// CNT entropy bracket.
    Cnt(RunArgs),
    /// Evaluate the acceptance criteria on the tables in DIR.
    Report { dir: PathBuf },
}

#[derive(Debug, Args)]
struct RunArgs {
    /// TOML configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides such as --map.a=2 or --n_list=[32,64].
    #[arg(trailing_var_arg = true, allow_hyphen_values = true, value_name = "--KEY=VALUE")]
    overrides: Vec<String>,
}

/// Sizes the global worker pool from `CATLAB_THREADS`.
fn init_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("CATLAB_THREADS") else { return Ok(()) };
    let n: usize = raw.parse().ok().filter(|&n| n > 0).ok_or_else(|| CliError::Config(format!("CATLAB_THREADS = `{raw}`")))?;
    // a pool built earlier in the process stays in place
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

fn run_command(name: &str, args: &RunArgs, f: fn(&ExperimentConfig) -> Result<commands::Outcome, CliError>) -> Result<i32, CliError> {
    let config = ExperimentConfig::load(args.config.as_deref(), &args.overrides)?;
    let outcome = f(&config)?;
    let manifest = table::write_artifacts(&config, name, &outcome.tables)?;
    for t in &outcome.tables {
        println!("wrote {}", config.output.join(t.file_name()).display());
    }
    println!("wrote {}", manifest.display());
    for b in &outcome.breaches {
        eprintln!("breach: {b}");
    }
    Ok(if outcome.breaches.is_empty() { EXIT_OK } else { EXIT_BREACH })
}

fn dispatch(command: &Command) -> Result<i32, CliError> {
    init_threads()?;
    match command {
        Command::VerifyAxioms(a) => run_command("verify-axioms", a, commands::verify_axioms),
        Command::Semiclassics(a) => run_command("semiclassics", a, commands::semiclassics),
        Command::Alf(a) => run_command("alf", a, commands::alf),
        Command::Cnt(a) => run_command("cnt", a, commands::cnt),
        Command::Report { dir } => {
            let (verdicts, ok) = report::report(dir)?;
            for v in &verdicts {
                println!("{v}");
            }
            Ok(if ok { EXIT_OK } else { EXIT_BREACH })
        }
    }
}

/// Runs the harness on `args` (program name first) and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match dispatch(&cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
