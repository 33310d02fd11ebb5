use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use rates_lab_cli::{run, Cli, RunManifest, EXIT_USAGE};

fn main() -> ExitCode {
    let manifest = match RunManifest::from_cli(Cli::parse()) {
        Ok(m) => m,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(EXIT_USAGE as u8);
        }
    };
    let outcome = run(&manifest);
    let mut sink: Box<dyn Write> = if outcome.exit_code == EXIT_USAGE {
        Box::new(std::io::stderr().lock())
    } else {
        Box::new(std::io::stdout().lock())
    };
    for line in &outcome.lines {
        // a closed pipe is not a reason to change the exit code
        if writeln!(sink, "{line}").is_err() {
            break;
        }
    }
    ExitCode::from(outcome.exit_code as u8)
}
