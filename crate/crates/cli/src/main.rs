use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = anorand_cli::args::Cli::parse();
    match anorand_cli::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
