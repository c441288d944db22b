use std::process::ExitCode;

use clap::Parser;
use reachgrid::commands::{run, Cli};

fn main() -> ExitCode {
    ExitCode::from(run(Cli::parse()))
}
