//! `bridge-stein`: experiment runner for bridge dynamics and bounds.
//!
//! Exit status: 0 on success, 2 for configuration errors, 3 for numerical
//! failures, 1 for I/O failures.

mod args;
mod commands;
mod config_file;
mod output;

use std::process::ExitCode;

use clap::Parser;

use crate::args::Cli;
use crate::config_file::ConfigError;

const THREADS_VAR: &str = "BRIDGE_STEIN_THREADS";

fn configure_threads() -> Result<(), ConfigError> {
    let Ok(value) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| ConfigError(format!("{THREADS_VAR} must be a positive integer, got `{value}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| ConfigError(format!("cannot build the thread pool: {e}")))
}

fn exit_status(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<ConfigError>().is_some() {
        return 2;
    }
    if let Some(e) = err.downcast_ref::<bridge_stein::Error>() {
        return if e.is_numerical() { 3 } else { 2 };
    }
    1
}

fn main() -> ExitCode {
    let args = match config_file::merge(std::env::args_os().collect()) {
        Ok(args) => args,
        Err(e) => {
            eprintln!("bridge-stein: {e}");
            return ExitCode::from(2);
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("bridge-stein: {e}");
        return ExitCode::from(2);
    }
    match commands::run(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("bridge-stein: {e:#}");
            ExitCode::from(exit_status(&e))
        }
    }
}
