mod args;
mod commands;
mod config;
mod output;
mod reproduce;

use std::fs;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::Parser;

use args::{CircuitCommand, Cli, Command, OutputArgs};
use output::emit;

/// Failures the front end raises itself.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    GateFailed(String),
}

const THREADS_VAR: &str = "QUDITLAB_THREADS";

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Usage(format!("{THREADS_VAR} must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(format!("thread pool: {e}")))
}

fn dispatch(command: Command) -> Result<()> {
    let (out, args) = match command {
        Command::Bell(a) => (commands::bell(&a)?, a.out),
        Command::Witness(a) => (commands::witness(&a)?, a.out),
        Command::Steering(a) => (commands::steering(&a)?, a.out),
        Command::Randomness(a) => (commands::randomness(&a)?, a.out),
        Command::Tomo(a) => (commands::tomo(&a)?, a.out),
        Command::Qkd(a) => (commands::qkd(&a)?, a.out),
        Command::Circuit {
            command: CircuitCommand::Compile(a),
        } => (commands::compile(&a)?, a.out),
        Command::Reproduce(a) => {
            let (out, passed) = reproduce::reproduce(&a)?;
            emit(
                &out,
                &OutputArgs {
                    format: a.format,
                    output: a.output.clone(),
                },
            )?;
            if !passed {
                return Err(CliError::GateFailed("computed values fall outside the reference tolerances".into()).into());
            }
            return Ok(());
        }
        Command::Run(a) => {
            let text = fs::read_to_string(&a.config)
                .with_context(|| format!("reading {}", a.config.display()))?;
            let argv = config::ExperimentConfig::parse(&text)?.to_argv()?;
            let cli = Cli::try_parse_from(argv).map_err(|e| CliError::Usage(format!("config: {e}")))?;
            return dispatch(cli.command);
        }
    };
    emit(&out, &args)
}

fn exit_code(e: &anyhow::Error) -> u8 {
    for cause in e.chain() {
        if let Some(c) = cause.downcast_ref::<CliError>() {
            return match c {
                CliError::Usage(_) => 1,
                CliError::GateFailed(_) => 2,
            };
        }
        if let Some(q) = cause.downcast_ref::<quditlab::Error>() {
            use quditlab::Error::*;
            return match q {
                Infeasible(_) | Unbounded(_) | NumericalFailure(_) | IncompleteData(_)
                | DegenerateBounds => 2,
                _ => 1,
            };
        }
    }
    1
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(1);
    }
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
