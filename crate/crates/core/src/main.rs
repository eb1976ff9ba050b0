use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use fallpred::cli::{exit_code, run, Cli, EXIT_CHECK_FAILED};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(outcome) => {
            if let Some(bytes) = &outcome.stdout {
                let mut out = std::io::stdout().lock();
                if out.write_all(bytes).and_then(|_| out.flush()).is_err() {
                    return ExitCode::FAILURE;
                }
                eprint!("{}", outcome.message);
            } else {
                print!("{}", outcome.message);
            }
            if outcome.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_CHECK_FAILED)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
