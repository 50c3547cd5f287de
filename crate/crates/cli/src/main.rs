use std::process::ExitCode;

use clap::Parser;
use obskit::{exit_code, run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(files) => {
            for f in files {
                eprintln!("wrote {}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("obskit {}: {e:#}", cli.command.name());
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
