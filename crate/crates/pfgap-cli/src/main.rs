//! `pfgap` — batch front end for the pfgap library.
//!
//! Exit status: 0 when every check is within tolerance, 2 on a numerical or
//! usage failure, 3 when a Monte Carlo estimate is statistically rejected.

mod args;
mod commands;
mod output;

use args::{Cli, Command};
use clap::Parser;
use commands::{Failure, Outcome};
use output::{render, resolve_format, Meta};
use std::process::ExitCode;

const NUMERICAL_FAILURE: u8 = 2;
const STATISTICAL_REJECTION: u8 = 3;

fn fresh_seed() -> u64 {
    use std::hash::{BuildHasher, RandomState};
    RandomState::new().hash_one(std::time::SystemTime::now())
}

fn run(cli: &Cli, seed: Option<u64>) -> Result<Outcome, pfgap::Error> {
    let tol = &cli.common.tol;
    let seed_or_fail = || seed.expect("Monte Carlo commands always carry a seed");
    match &cli.command {
        Command::Kappa(a) => commands::kappa(a),
        Command::Eval(a) => commands::eval(a),
        Command::Fit(a) => commands::fit(a, tol),
        Command::Mc(a) => commands::mc(a, seed_or_fail(), tol),
        Command::Sim(a) => commands::sim(a, seed_or_fail(), tol),
        Command::Zeros(a) => commands::zeros(a, seed_or_fail(), tol),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let stochastic = matches!(cli.command, Command::Mc(_) | Command::Sim(_) | Command::Zeros(_));
    let seed = match (cli.common.seed, stochastic) {
        (Some(s), _) => Some(s),
        (None, true) => {
            let s = fresh_seed();
            eprintln!("seed: {s}");
            Some(s)
        }
        (None, false) => None,
    };

    let outcome = match run(&cli, seed) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(NUMERICAL_FAILURE);
        }
    };
    let meta = Meta {
        version: env!("CARGO_PKG_VERSION"),
        command_line: std::env::args().collect::<Vec<_>>().join(" "),
        seed,
        tolerances: cli.common.tol,
        run: &cli,
    };
    let out = cli.common.out.as_deref();
    let format = resolve_format(cli.common.format, out, outcome.default_format);
    let written = render(&outcome.table, &meta, format).and_then(|bytes| match out {
        Some(path) => std::fs::write(path, bytes).map_err(|e| format!("{}: {e}", path.display())),
        None => {
            use std::io::Write;
            std::io::stdout().write_all(&bytes).map_err(|e| e.to_string())
        }
    });
    if let Err(e) = written {
        eprintln!("error: {e}");
        return ExitCode::from(NUMERICAL_FAILURE);
    }
    match outcome.failure {
        None => ExitCode::SUCCESS,
        Some(Failure::Numerical(msg)) => {
            eprintln!("numerical failure: {msg}");
            ExitCode::from(NUMERICAL_FAILURE)
        }
        Some(Failure::Statistical(msg)) => {
            eprintln!("statistical rejection: {msg}");
            ExitCode::from(STATISTICAL_REJECTION)
        }
    }
}
