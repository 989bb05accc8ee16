use std::process::ExitCode;

use clap::Parser;
use concomitant_cli::{exit, run, Cli, Outcome, UsageError};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(Outcome::Converged) => ExitCode::from(exit::SUCCESS),
        Ok(Outcome::Unconverged) => {
            eprintln!("warning: some fits did not converge; results were written and flagged");
            ExitCode::from(exit::UNCONVERGED)
        }
        Err(e) if e.is::<UsageError>() => {
            eprintln!("error: {e}");
            ExitCode::from(exit::USAGE)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit::FAILURE)
        }
    }
}
