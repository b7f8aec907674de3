//! Command-line front end: dataset generation, training, selection runs,
//! evaluation and cross-run reports.

pub mod commands;
pub mod config;
pub mod error;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use commands::{EvalArgs, GenArgs, ReportArgs, SelectArgs, TrainArgs};
pub use config::RunConfig;
pub use error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "nbv", version, about = "Synthetic next-best-view selection experiments")]
pub struct Cli {
    /// Worker threads for parallel sections; outputs do not depend on it.
    #[arg(long, global = true)]
    pub workers: Option<usize>,

    /// Root for default output directories.
    #[arg(long, global = true, env = "NBV_OUTPUT_ROOT", default_value = "runs")]
    pub output_root: PathBuf,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic scene, trajectory and rendered dataset.
    Gen(GenArgs),
    /// Train a field on a dataset split and write a checkpoint.
    Train(TrainArgs),
    /// Run incremental view selection with one strategy.
    Select(SelectArgs),
    /// Evaluate a field checkpoint on held-out views.
    Eval(EvalArgs),
    /// Aggregate several selection runs into comparison tables.
    Report(ReportArgs),
}

pub fn run(cli: Cli) -> CliResult<()> {
    let work = || match cli.command {
        Command::Gen(a) => commands::gen(&a, &cli.output_root).map(drop),
        Command::Train(a) => commands::train(&a, &cli.output_root).map(drop),
        Command::Select(a) => commands::select(&a, &cli.output_root).map(drop),
        Command::Eval(a) => commands::eval(&a, &cli.output_root).map(drop),
        Command::Report(a) => commands::report(&a, &cli.output_root).map(drop),
    };
    match cli.workers {
        Some(0) => Err(CliError::Config("--workers must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Config(e.to_string()))?
            .install(work),
        None => work(),
    }
}
