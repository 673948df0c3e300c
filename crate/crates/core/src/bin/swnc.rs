use std::io::ErrorKind;
use std::process::ExitCode;

use clap::Parser;
use swnc::cli::CliError;

fn main() -> ExitCode {
    let args = swnc::cli::Args::parse();
    match swnc::cli::run(&args, &mut std::io::stdout().lock()) {
        Ok(code) => code,
        Err(CliError::Output(e)) if e.kind() == ErrorKind::BrokenPipe => ExitCode::SUCCESS,
        Err(CliError::Csv(e)) if matches!(e.kind(), csv::ErrorKind::Io(io) if io.kind() == ErrorKind::BrokenPipe) => {
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
