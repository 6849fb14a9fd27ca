//! Command line front end for the `mco-ce` library: run the benchmark
//! matrix, render convergence charts, demonstrate the Monte Carlo
//! foundations, and list the built-in vocabulary.
//!
//! The binary is a thin wrapper over [`run`], which returns the process exit
//! code: 0 on success, 1 for runtime failures, 2 for configuration and usage
//! mistakes (with every violation listed, not just the first).

pub mod commands;
pub mod config;
pub mod svg;

use clap::Parser;

use commands::{dispatch, Cli, Failure};

/// Parses `args` (argv-style, program name first) and runs the command,
/// returning the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version land here too; clap's exit code separates
            // them (0) from genuine usage errors (2).
            let _ = e.print();
            return e.exit_code();
        }
    };
    match dispatch(&cli) {
        Ok(()) => 0,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            2
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            1
        }
    }
}
