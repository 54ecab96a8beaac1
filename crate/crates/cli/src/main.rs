//! `gather`: command-line entry point for the gathering simulator.

mod cli;
mod commands;
mod reference;

use std::process::ExitCode;

use clap::{CommandFactory, Parser};

use crate::cli::{Cli, Command};

fn main() -> ExitCode {
    // Usage errors exit with status 2, help and version with 0.
    let cli = Cli::try_parse().unwrap_or_else(|e| e.exit());
    env_logger::Builder::new()
        .filter_level(cli.global.log_level)
        .format_timestamp(None)
        .init();
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cli: &Cli) -> anyhow::Result<()> {
    let g = &cli.global;
    if g.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(g.threads)
            .build_global()?;
    }
    match &cli.command {
        Command::Generate(a) => commands::generate(g, a),
        Command::Run(a) => commands::run(g, a),
        Command::Bench(a) => commands::bench(g, a),
        Command::Train(a) => commands::train(g, a),
        Command::Sweep(a) => commands::sweep(g, a),
        Command::Render(a) => commands::render(g, a),
        Command::Serve(a) => commands::serve(g, a),
        Command::Controller(a) => commands::controller(g, a),
        Command::Reference(a) => {
            let text = reference::markdown(Cli::command());
            match &a.output {
                Some(p) => std::fs::write(p, text)?,
                None => print!("{text}"),
            }
            Ok(())
        }
    }
}
