use std::process::ExitCode;

use clap::Parser;
use skelforge_cli::{run, Cli};

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("SKELFORGE_LOG", "warn")).init();
    ExitCode::from(run(Cli::parse()))
}
