mod args;
mod commands;
mod config;
mod error;
mod output;

use std::ffi::OsString;
use std::io::Write;
use std::process::ExitCode;

use clap::{CommandFactory, FromArgMatches};

use crate::args::Cli;
use crate::error::CliError;

fn main() -> ExitCode {
    let argv: Vec<OsString> = std::env::args_os().collect();
    match run(argv) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("landscape: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(argv: Vec<OsString>) -> Result<ExitCode, CliError> {
    let user_args = argv.get(2..).unwrap_or_default().to_vec();
    let (argv, config) = config::merge_config(argv)?;
    let matches = match Cli::command().try_get_matches_from(&argv) {
        Ok(m) => m,
        Err(e) => {
            // help and version go to stdout with status 0, usage errors to stderr with 2
            e.print()?;
            return Ok(ExitCode::from(e.exit_code() as u8));
        }
    };
    let cli = Cli::from_arg_matches(&matches).map_err(|e| CliError::Usage(e.to_string()))?;
    let common = cli.command.common();

    if common.describe {
        if let Some((name, sub)) = matches.subcommand() {
            eprint!("{}", config::describe_block(name, sub, &user_args, &config));
        }
    }
    if common.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(common.threads)
            .build_global()
            .map_err(|e| CliError::Usage(format!("cannot size the worker pool: {e}")))?;
    }

    let report = commands::dispatch(&cli.command)?;
    let rendered = report.render(common.format)?;
    match &common.output {
        Some(path) => std::fs::write(path, rendered)?,
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(rendered.as_bytes())?;
            out.flush()?;
        }
    }
    match report.failure {
        Some(msg) => Err(CliError::Failed(msg)),
        None => Ok(ExitCode::SUCCESS),
    }
}
