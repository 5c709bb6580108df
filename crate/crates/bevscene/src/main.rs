use std::process::ExitCode;

use bevscene::cli::{run, Cli};
use clap::Parser;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("bevscene: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
