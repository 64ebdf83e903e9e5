//! `bottomup`: calibrate, apply and evaluate bottom-up closed testing procedures.

mod args;
mod commands;
mod config;
mod error;
mod io;

use std::process::ExitCode;

use clap::{CommandFactory, FromArgMatches};

use args::{Cli, Command};
use error::CliError;

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("bottomup: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run() -> Result<(), CliError> {
    let argv = config::expand_argv(std::env::args_os().collect())?;
    let matches = match Cli::command().try_get_matches_from(&argv) {
        Ok(m) => m,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return Ok(());
            }
            return Err(CliError::Usage(
                e.render().to_string().trim_end().to_string(),
            ));
        }
    };
    let cli = Cli::from_arg_matches(&matches).map_err(|e| CliError::Usage(e.to_string()))?;
    init_logging(cli.verbose);
    if let Some(n) = cli.workers {
        if n == 0 {
            return Err(CliError::Usage("--workers must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Internal(e.to_string()))?;
    }
    let (name, sub) = matches.subcommand().expect("subcommand is required");
    let echo = args::echo(name, sub);
    log::info!("bottomup {echo}");
    match &cli.command {
        Command::Calibrate(a) => commands::calibrate(a, &echo),
        Command::Apply(a) => commands::apply(a, &echo),
        Command::Simulate(a) => commands::simulate(a, &echo),
        Command::Region(a) => commands::region(a, &echo),
        Command::Exact(a) => commands::exact(a, &echo),
        Command::SolveTheta(a) => commands::solve_theta(a),
        Command::Compare(a) => commands::compare(a, &echo),
    }
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
}
