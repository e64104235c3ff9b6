//! `aberrant` command-line tool.
//!
//! Exit status: 0 on success, 1 on usage errors (bad flags, invalid
//! configuration), 2 on data errors (unreadable or malformed input files).

mod args;
mod commands;
mod error;
mod input;
mod settings;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use crate::args::{Cli, Command};
use crate::error::CliError;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    let result = match &cli.command {
        Command::Detect(a) => commands::cmd_detect(a),
        Command::Evaluate(a) => commands::cmd_evaluate(a),
        Command::Sweep(a) => commands::cmd_sweep(a),
        Command::Simulate(a) => commands::cmd_simulate(a),
        Command::Profile(a) => commands::cmd_profile(a),
    };
    match result {
        Ok(()) | Err(CliError::BrokenPipe) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("aberrant: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
