use clap::Parser;
use disentangle_cli::args::Cli;

fn main() -> std::process::ExitCode {
    match disentangle_cli::run(Cli::parse()) {
        Ok(()) => std::process::ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            std::process::ExitCode::FAILURE
        }
    }
}
