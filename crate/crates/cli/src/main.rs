mod args;
mod commands;
mod io;
mod settings;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use io::{CliError, CliResult};

fn run(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        Command::Audit(a) => commands::audit_cmd(a),
        Command::Fit(a) => commands::fit_cmd(a),
        Command::Predict(a) => commands::predict_cmd(a),
        Command::Coverage(a) => commands::coverage_cmd(a),
        Command::Rterm(a) => commands::rterm_cmd(a),
        Command::Duality(a) => commands::duality_cmd(a),
        Command::Scales(a) => commands::scales_cmd(a),
        Command::ReproducePaper(a) => commands::reproduce_cmd(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(j) = cli.jobs {
        if j == 0 {
            eprintln!("error: {}", CliError::Config("--jobs must be at least 1".into()));
            return ExitCode::from(2);
        }
        pool = pool.num_threads(j);
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start worker pool: {e}");
            return ExitCode::from(2);
        }
    };
    match pool.install(|| run(&cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
