use std::process::ExitCode;

use clap::Parser;
use ssm::cli::{run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(outcome) => {
            print!("{}", outcome.stdout);
            println!("wrote {} artifacts to {}", outcome.manifest.artifacts.len(), outcome.out.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("ssm: {e}");
            ExitCode::from(e.category.exit_code() as u8)
        }
    }
}
