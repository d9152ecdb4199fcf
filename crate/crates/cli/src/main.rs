//! `umc`: grid building, compression, decompression, verification,
//! parameter sweeps and synthetic data.
//!
//! Exit status is 0 on success, 1 when an operation or check fails and 2
//! on a usage error.

mod args;
mod commands;
mod config;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};

pub(crate) enum Failure {
    Usage(anyhow::Error),
    Contract(anyhow::Error),
    /// Usage error whose message was already printed.
    Reported,
}

fn run() -> Result<(), Failure> {
    let argv = config::overlay(std::env::args_os().collect()).map_err(Failure::Usage)?;
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            // --help and --version print to stdout and succeed
            let _ = e.print();
            return if code == 0 { Ok(()) } else { Err(Failure::Reported) };
        }
    };
    match cli.command {
        Command::Synth(a) => commands::synth(a),
        Command::BuildGrid(a) => commands::build_grid_cmd(a),
        Command::Compress(a) => commands::compress_cmd(a),
        Command::Decompress(a) => commands::decompress_cmd(a),
        Command::Verify(a) => commands::verify(a),
        Command::Sweep(a) => commands::sweep(a),
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Contract(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(e)) => {
            eprintln!("usage error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Reported) => ExitCode::from(2),
    }
}
