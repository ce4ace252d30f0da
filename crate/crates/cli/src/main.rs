//! `semtype`: mention detection, semantic type prediction, type-filtered
//! linking, evaluation and silver corpus construction.
//!
//! Exit codes: 0 on success, 1 on internal errors, 2 on usage or input errors.

mod commands;
mod config;

use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::LevelFilter;

use commands::{annotate, corpus, evaluate, link, typing, CmdResult, Failure};

#[derive(Debug, Parser)]
#[command(name = "semtype", version, about = "Semantic type filtering for entity linking")]
struct Cli {
    /// Seed for every random choice (training order, bootstrap resamples).
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,
    /// Worker threads; all available cores when omitted.
    #[arg(long, global = true, value_parser = clap::value_parser!(u32).range(1..))]
    threads: Option<u32>,
    /// off, error, warn, info, debug or trace.
    #[arg(long, global = true, default_value = "warn")]
    log_level: LevelFilter,
    /// File of key=value lines supplying flag defaults; explicit flags win.
    #[arg(long, global = true, value_parser = config::resolve_input)]
    config: Option<std::path::PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    Annotate(annotate::AnnotateArgs),
    Train(typing::TrainArgs),
    Tune(typing::TuneArgs),
    PredictTypes(typing::PredictArgs),
    Link(link::LinkArgs),
    Evaluate(evaluate::EvaluateArgs),
    BuildCorpus(corpus::BuildCorpusArgs),
}

fn dispatch(cli: &Cli) -> CmdResult {
    match &cli.command {
        Command::Annotate(a) => annotate::run(a),
        Command::Train(a) => typing::train_cmd(a, cli.seed),
        Command::Tune(a) => typing::tune_cmd(a),
        Command::PredictTypes(a) => typing::predict_cmd(a),
        Command::Link(a) => link::run(a),
        Command::Evaluate(a) => evaluate::run(a, cli.seed),
        Command::BuildCorpus(a) => corpus::run(a),
    }
}

fn run(cli: &Cli) -> CmdResult {
    match cli.threads {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n as usize)
                .build()
                .map_err(|e| Failure::Internal(anyhow::Error::new(e).context("starting worker pool")))?;
            pool.install(|| dispatch(cli))
        }
        None => dispatch(cli),
    }
}

fn main() -> ExitCode {
    let args = match config::expand_args(std::env::args_os().collect()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    env_logger::Builder::new()
        .filter_level(cli.log_level)
        .format_timestamp(None)
        .init();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error());
            ExitCode::from(f.exit_code())
        }
    }
}
