use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use dsm_cli::error::exit;
use dsm_cli::{run, Cli};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(exit::CONFIG),
            };
        }
    };
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("dsm: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
