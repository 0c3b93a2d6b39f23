//! `qranging` command-line front end.

mod args;
mod commands;

use std::io::Write;
use std::process::ExitCode;

use qranging::Error as CoreError;

use crate::args::{parse_with_config, Command};
use crate::commands::Outcome;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Clap(#[from] clap::Error),
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("{0} check(s) failed")]
    Validation(usize),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// 0 for help and version, 1 for bad input, 2 for numerical or
    /// validation failures.
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Clap(e) if !e.use_stderr() => 0,
            CliError::Clap(_) | CliError::Usage(_) => 1,
            CliError::Core(e) => match e {
                CoreError::InvalidParameter { .. }
                | CoreError::DimensionMismatch { .. }
                | CoreError::ModeOutOfRange { .. }
                | CoreError::Unsupported(_)
                | CoreError::NotImplemented(_) => 1,
                _ => 2,
            },
            CliError::Validation(_) | CliError::Io(_) => 2,
        }
    }
}

fn thread_pool() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("QRANGING_THREADS") else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
        CliError::Usage(format!(
            "QRANGING_THREADS must be a positive integer, got `{raw}`"
        ))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(format!("cannot start thread pool: {e}")))
}

/// Echo of the invocation with every explicitly given flag, in order.
fn invocation(argv: &[std::ffi::OsString]) -> String {
    argv.iter()
        .skip(1)
        .map(|a| a.to_string_lossy().into_owned())
        .collect::<Vec<_>>()
        .join(" ")
}

fn emit(
    command: &Command,
    argv: &[std::ffi::OsString],
    mut table: qranging::table::Table,
) -> Result<(), CliError> {
    table.prepend_comments([
        format!("qranging {}", env!("CARGO_PKG_VERSION")),
        format!("command: qranging {}", invocation(argv)),
    ]);
    match &command.common().out {
        Some(path) => table.write_atomic(path)?,
        None => std::io::stdout()
            .lock()
            .write_all(table.to_csv().as_bytes())?,
    }
    Ok(())
}

fn run() -> Result<(), CliError> {
    let argv: Vec<_> = std::env::args_os().collect();
    let cli = parse_with_config(argv.clone())?;
    thread_pool()?;
    match commands::run(&cli.command)? {
        Outcome::Table(table) => emit(&cli.command, &argv, table),
        Outcome::Checks {
            lines,
            table,
            passed,
        } => {
            let mut out = std::io::stdout().lock();
            for line in &lines {
                writeln!(out, "{line}")?;
            }
            drop(out);
            if cli.command.common().out.is_some() {
                emit(&cli.command, &argv, table)?;
            }
            if passed {
                Ok(())
            } else {
                Err(CliError::Validation(
                    lines.iter().filter(|l| l.starts_with("FAIL")).count(),
                ))
            }
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Clap(e)) => {
            let _ = e.print();
            ExitCode::from(CliError::Clap(e).exit_code())
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
