//! `conedeflate` command-line driver.
//!
//! Exit codes: 0 ok, 1 usage or input error, 2 numerical failure or failed
//! self-audit, 3 uncertified frame, 4 inconsistent chain, 5 invalid chain.

mod args;
mod commands;
mod exit;
mod output;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};

fn main() -> ExitCode {
    env_logger::Builder::from_env(
        env_logger::Env::new()
            .filter("CONEDEFLATE_LOG")
            .write_style("CONEDEFLATE_LOG_STYLE"),
    )
    .init();

    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { exit::USAGE } else { exit::OK });
        }
    };
    let result = match &cli.command {
        Command::Decompose(a) => commands::decompose(a),
        Command::Parsevalize(a) => commands::parsevalize(a),
        Command::VerifyChain(a) => commands::verify(a),
        Command::KernelFeatures(a) => commands::kernel_features(a),
        Command::Report(a) => commands::report(a),
    };
    match result {
        Ok(()) => ExitCode::from(exit::OK),
        Err(f) => {
            eprintln!("conedeflate: {f}");
            ExitCode::from(f.code)
        }
    }
}
