//! `mfg` — solves a configured mean field game and writes CSV outputs.
//!
//! Exit codes: 0 converged, 2 iteration limit reached, 3 configuration or
//! I/O error, 4 solver failure.

use clap::error::ErrorKind;
use clap::Parser;

use mfg_cli::config::{Cli, RunConfig};
use mfg_cli::runner;

fn main() {
    env_logger::init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 3,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let config = match RunConfig::resolve(cli) {
        Ok(config) => config,
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(3);
        }
    };
    match runner::run(&config) {
        Ok(outcome) => {
            println!(
                "converged in {} iterations (final metric {:.3e}); outputs in {}",
                outcome.iterations,
                outcome.final_metric,
                config.out.display()
            );
        }
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
}
