//! newsflow: a deterministic pipeline from time-stamped semantic triples to
//! graph change-event counts and a fitted multivariate Hawkes model.
//!
//! Exit codes: 0 success, 1 processing error, 2 usage/configuration error.

mod commands;
mod config;
mod manifest;

use std::env;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{classify, cluster, count, dedup, ingest, model, simulate};
use config::{usage_err, Ctx, FileConfig, UsageError};

#[derive(Debug, Parser)]
#[command(
    name = "newsflow",
    version,
    about = "Track how news stories grow: graph change events and Hawkes-process analysis over triple streams"
)]
struct Cli {
    /// Configuration file (key=value); defaults to $NEWSFLOW_CONFIG if set.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Worker threads for parallel sections (results do not depend on this).
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,
    /// Directory for output files and the run manifest.
    #[arg(long, global = true, value_name = "DIR")]
    out_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Validate a raw triple stream and write the normalized corpus.
    Ingest(ingest::IngestArgs),
    /// Summarize a corpus and export daily word counts.
    Stats(ingest::StatsArgs),
    /// Cluster near-duplicate phrases and rewrite the corpus.
    Dedup(dedup::DedupArgs),
    /// Count append/extend/mutate events against the initial triples.
    Count(count::CountArgs),
    /// Fit Hawkes parameters to count series by maximum likelihood.
    Fit(model::FitArgs),
    /// Compute seed-averaged conditional-intensity curves.
    Intensity(model::IntensityArgs),
    /// Assign a test group to the nearest reference group by curve distance.
    Classify(classify::ClassifyArgs),
    /// Cluster seeds by their flattened count series (k-means).
    Cluster(cluster::ClusterArgs),
    /// Draw synthetic count series from given Hawkes parameters.
    Simulate(simulate::SimulateArgs),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // --help / --version land here too; they are not failures.
            let code = if err.use_stderr() { 2 } else { 0 };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            let code = if err.is::<UsageError>() { 2 } else { 1 };
            ExitCode::from(code)
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let config_path = cli
        .config
        .or_else(|| env::var_os("NEWSFLOW_CONFIG").map(PathBuf::from));
    let file = match &config_path {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };

    let bootstrap = Ctx {
        file,
        out_dir: PathBuf::new(),
        threads: 0,
    };
    let threads = bootstrap.opt(cli.threads, "threads")?.unwrap_or(1usize);
    if threads == 0 {
        return Err(usage_err("--threads must be at least 1"));
    }
    let out_dir = bootstrap
        .opt_path(&cli.out_dir, "out-dir")
        .unwrap_or_else(|| PathBuf::from("."));
    let ctx = Ctx {
        out_dir,
        threads,
        ..bootstrap
    };

    rayon::ThreadPoolBuilder::new()
        .num_threads(ctx.threads)
        .build_global()
        .map_err(|e| anyhow::anyhow!("cannot configure {} worker threads: {e}", ctx.threads))?;

    fs::create_dir_all(&ctx.out_dir).map_err(|e| {
        anyhow::anyhow!("cannot create output directory {}: {e}", ctx.out_dir.display())
    })?;

    match &cli.command {
        Command::Ingest(args) => ingest::run_ingest(&ctx, args),
        Command::Stats(args) => ingest::run_stats(&ctx, args),
        Command::Dedup(args) => dedup::run_dedup(&ctx, args),
        Command::Count(args) => count::run_count(&ctx, args),
        Command::Fit(args) => model::run_fit(&ctx, args),
        Command::Intensity(args) => model::run_intensity(&ctx, args),
        Command::Classify(args) => classify::run_classify(&ctx, args),
        Command::Cluster(args) => cluster::run_cluster(&ctx, args),
        Command::Simulate(args) => simulate::run_simulate(&ctx, args),
    }
}
