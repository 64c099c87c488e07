//! `ingest` (validate and normalize a triple stream) and `stats` (corpus
//! summary and daily word counts).

use std::path::PathBuf;

use chrono::NaiveDate;
use clap::Args;

use newsflow_core::corpus;

use crate::config::{parse_date, Ctx};
use crate::manifest::{resolve_out, Manifest};

use super::{create_out, finish, load_corpus, Window};

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Raw triple stream, one JSON object per line.
    #[arg(long, value_name = "FILE")]
    pub corpus: Option<PathBuf>,
    /// First day of the observation window (YYYY-MM-DD).
    #[arg(long, value_parser = parse_date, value_name = "DATE")]
    pub start: Option<NaiveDate>,
    /// Last day of the observation window (YYYY-MM-DD).
    #[arg(long, value_parser = parse_date, value_name = "DATE")]
    pub end: Option<NaiveDate>,
    /// Normalized corpus output (default corpus.jsonl in the output dir).
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

pub fn run_ingest(ctx: &Ctx, args: &IngestArgs) -> anyhow::Result<()> {
    let corpus_path = ctx.require_path(&args.corpus, "corpus")?;
    let window = Window::resolve(ctx, args.start, args.end)?;
    let corpus = load_corpus(&corpus_path, window.start, window.end)?;

    let out = resolve_out(&ctx.out_dir, args.out.as_deref(), "corpus.jsonl");
    let mut w = create_out(&out)?;
    corpus::write_jsonl(&corpus, &mut w)?;
    finish(w, &out)?;

    let wc = resolve_out(&ctx.out_dir, None, "word_counts.csv");
    let mut w = create_out(&wc)?;
    corpus::write_word_counts(&mut w, &corpus.word_counts)?;
    finish(w, &wc)?;

    println!("records={}", corpus.records.len());
    println!("days={}", corpus.horizon);
    println!(
        "sources={}",
        corpus.sources.iter().cloned().collect::<Vec<_>>().join(",")
    );

    let mut m = Manifest::new("ingest");
    m.input("corpus", &corpus_path);
    m.output("corpus", &out.name);
    m.output("word_counts", &wc.name);
    m.config("start", window.start);
    m.config("end", window.end);
    m.write(&ctx.out_dir)?;
    Ok(())
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    /// Triple stream to summarize.
    #[arg(long, value_name = "FILE")]
    pub corpus: Option<PathBuf>,
    /// First day of the observation window (YYYY-MM-DD).
    #[arg(long, value_parser = parse_date, value_name = "DATE")]
    pub start: Option<NaiveDate>,
    /// Last day of the observation window (YYYY-MM-DD).
    #[arg(long, value_parser = parse_date, value_name = "DATE")]
    pub end: Option<NaiveDate>,
    /// Word-count output (default word_counts.csv in the output dir).
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

pub fn run_stats(ctx: &Ctx, args: &StatsArgs) -> anyhow::Result<()> {
    let corpus_path = ctx.require_path(&args.corpus, "corpus")?;
    let window = Window::resolve(ctx, args.start, args.end)?;
    let corpus = load_corpus(&corpus_path, window.start, window.end)?;

    let out = resolve_out(&ctx.out_dir, args.out.as_deref(), "word_counts.csv");
    let mut w = create_out(&out)?;
    corpus::write_word_counts(&mut w, &corpus.word_counts)?;
    finish(w, &out)?;

    println!("records={}", corpus.records.len());
    println!("days={}", corpus.horizon);
    println!(
        "sources={}",
        corpus.sources.iter().cloned().collect::<Vec<_>>().join(",")
    );
    println!(
        "word_counts={}",
        corpus
            .word_counts
            .iter()
            .map(u64::to_string)
            .collect::<Vec<_>>()
            .join(",")
    );

    let mut m = Manifest::new("stats");
    m.input("corpus", &corpus_path);
    m.output("word_counts", &out.name);
    m.config("start", window.start);
    m.config("end", window.end);
    m.write(&ctx.out_dir)?;
    Ok(())
}
