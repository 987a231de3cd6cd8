//! The `sobench` command-line pipeline: corpus building, sampling from a
//! generation gateway, sandboxed evaluation and reporting.

pub mod cli;
pub mod commands;
pub mod config;
pub mod gateway;
pub mod io;
pub mod manifest;

use std::io::Write;

use cli::{Cli, Command};
use config::{apply, Config};

/// Runs one parsed invocation, writing human-readable output to `out`.
pub fn run(cli: Cli, out: &mut dyn Write) -> anyhow::Result<()> {
    let mut config = Config::load(cli.config.as_deref())?;
    apply(&mut config.workers, cli.workers);
    if cli.seed.is_some() {
        config.seed = cli.seed;
    }
    if config.workers == 0 {
        anyhow::bail!("--workers must be at least 1");
    }
    match cli.command {
        Command::BuildCorpus(args) => commands::build_corpus::run(args, config, out),
        Command::Generate(args) => commands::generate::run(args, config, out),
        Command::Eval(args) => commands::eval::run(args, config, out),
        Command::Report(args) => commands::report::run(args, out),
        Command::Stats(args) => commands::stats::run(args, out),
    }
}
