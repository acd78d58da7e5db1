use std::process::ExitCode;

use clap::Parser;

mod args;
mod commands;
mod error;
mod manifest;

use args::{Cli, Command};

fn run(cli: &Cli) -> error::Result<()> {
    match &cli.command {
        Command::Vocab(a) => commands::vocab(a),
        Command::Cooccur(a) => commands::cooccur(a),
        Command::Shuffle(a) => commands::shuffle(a),
        Command::Train(a) => commands::train(a),
        Command::Eval(a) => commands::eval(a),
        Command::Similar(a) => commands::similar(a),
        Command::Analogy(a) => commands::analogy(a),
        Command::BenchCompare(a) => commands::bench_compare(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(error::EXIT_USAGE as u8)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
