use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    compmc_cli::run(&compmc_cli::Cli::parse())
}
