mod args;
mod commands;
mod io;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};

fn run(cli: &Cli) -> anyhow::Result<()> {
    match &cli.command {
        Command::Derive(a) => commands::derive(a),
        Command::Hessian(a) => commands::hessian(a),
        Command::Calibrate(a) => commands::calibrate(a),
        Command::MseSweep(a) => commands::mse_sweep(a),
        Command::CostSweep(a) => commands::cost_sweep(a),
        Command::RatioSweep(a) => commands::ratio_sweep(a),
        Command::Realize(a) => commands::realize(a),
    }
}

/// Exit 1 for I/O failures, 2 for configuration and other input errors.
fn exit_code(err: &anyhow::Error) -> u8 {
    if err.chain().any(|e| e.is::<std::io::Error>()) {
        1
    } else {
        2
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
