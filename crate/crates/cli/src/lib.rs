//! The `compmc` command-line tool as a library, so tests can drive it
//! in-process and read its artifacts back.

pub mod args;
pub mod artifacts;
pub mod commands;

use std::process::ExitCode;

pub use args::{Cli, Command};

/// Exit status: 0 on success, 1 when a requested check failed, 2 on error.
pub fn run(cli: &Cli) -> ExitCode {
    let outcome = match &cli.command {
        Command::Sample(a) => commands::cmd_sample(a),
        Command::OracleCheck(a) => commands::cmd_oracle_check(a),
        Command::Demo(a) => commands::cmd_demo(a),
        Command::SynthData(a) => commands::cmd_synth(a),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
