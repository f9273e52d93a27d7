//! `xmf`: batch front-end for ground-truth synthesis, video tracks, robust
//! fitting and registration evaluation.
//!
//! Exit codes: 0 success, 2 invalid arguments, 3 I/O or malformed input,
//! 4 no usable result.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::type_complexity)]

mod context;
mod eval;
mod fit;
mod synth;
mod tracks;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use context::{CliError, RunContext};

#[derive(Debug, Parser)]
#[command(name = "xmf", version, about = "Cross-modality matching data and evaluation toolkit")]
struct Cli {
    /// Run seed; per-item seeds are derived from it.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads (defaults to the number of CPUs). Does not change outputs.
    #[arg(long, global = true, value_parser = clap::value_parser!(u32).range(1..))]
    workers: Option<u32>,
    /// JSON file of parameter overrides, keyed by subcommand
    /// (`synth_warp_pairs`, `synth_depth_pairs`, `synth_modality`,
    /// `tracks_build`, `tracks_select_pairs`, `fit`, `eval`).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Synthesize training or evaluation pairs.
    #[command(subcommand)]
    Synth(synth::SynthCmd),
    /// Build tracks from video matches and select training pairs.
    #[command(subcommand)]
    Tracks(tracks::TracksCmd),
    /// Robustly fit a model to one match file.
    Fit(fit::FitArgs),
    /// Run an evaluation protocol over a manifest of predictions.
    Eval(eval::EvalArgs),
    /// Summarize or re-aggregate an evaluation report.
    Report(eval::ReportArgs),
}

fn run(cli: &Cli) -> Result<(), CliError> {
    if let Some(n) = cli.workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n as usize)
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    let ctx = RunContext::new(cli.seed, cli.config.as_deref())?;
    match &cli.command {
        Command::Synth(c) => synth::run(&ctx, c),
        Command::Tracks(c) => tracks::run(&ctx, c),
        Command::Fit(a) => fit::run(&ctx, a),
        Command::Eval(a) => eval::run_eval(&ctx, a),
        Command::Report(a) => eval::run_report(a),
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            std::process::exit(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).parse_default_env().init();
    if let Err(e) = run(&cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
