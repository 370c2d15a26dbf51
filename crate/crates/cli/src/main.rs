use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use lasskit_cli::{configure_threads, output, run, Cli, Command, EXIT_FAILURE};

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(e.code);
    }
    let path = match &cli.command {
        Command::Predict(a) => a.out.clone(),
        _ => None,
    };
    let mut out = match output(path.as_deref()) {
        Ok(out) => out,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_FAILURE);
        }
    };
    let code = match run(cli, &mut out) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.code
        }
    };
    if let Err(e) = out.flush() {
        eprintln!("error: {e}");
        return ExitCode::from(EXIT_FAILURE);
    }
    ExitCode::from(code)
}
