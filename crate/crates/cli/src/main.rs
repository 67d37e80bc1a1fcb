mod args;
mod commands;
mod input;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use args::{Cli, Command};
use commands::CliError;

fn run(cli: Cli) -> Result<(), CliError> {
    let threads = match &cli.command {
        Command::Walk(a) => a.run.threads,
        Command::Lis(a) => a.run.threads,
        Command::Certify(a) => a.run.threads,
        Command::Dyadic(a) => a.run.threads,
        Command::Chain(a) => a.run.threads,
        Command::Scaling(a) => a.run.threads,
        Command::Probe(a) => a.run.threads,
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Internal(e.to_string()))?;
    pool.install(|| match &cli.command {
        Command::Walk(a) => commands::walk(a),
        Command::Lis(a) => commands::lis(a),
        Command::Certify(a) => commands::certify(a),
        Command::Dyadic(a) => commands::dyadic(a),
        Command::Chain(a) => commands::chain(a),
        Command::Scaling(a) => commands::scaling(a),
        Command::Probe(a) => commands::probe(a),
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(3),
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}
