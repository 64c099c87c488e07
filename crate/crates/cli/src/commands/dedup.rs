//! `dedup`: cluster near-duplicate phrases and rewrite the corpus onto
//! canonical representatives.

use std::path::PathBuf;

use chrono::NaiveDate;
use clap::Args;

use newsflow_core::corpus;
use newsflow_core::dedup::{
    apply_canonical_map, build_canonical_map, load_embeddings, phrase_vocabulary,
};

use crate::config::{parse_date, Ctx};
use crate::manifest::{resolve_out, Manifest};

use super::{create_out, finish, load_corpus, Window};

pub const DEFAULT_COARSE: f64 = 0.5;
pub const DEFAULT_FINE: f64 = 0.4;

#[derive(Debug, Args)]
pub struct DedupArgs {
    /// Triple stream to deduplicate.
    #[arg(long, value_name = "FILE")]
    pub corpus: Option<PathBuf>,
    /// Word-embedding table (token followed by its vector per line).
    #[arg(long, value_name = "FILE")]
    pub embeddings: Option<PathBuf>,
    /// First day of the observation window (YYYY-MM-DD).
    #[arg(long, value_parser = parse_date, value_name = "DATE")]
    pub start: Option<NaiveDate>,
    /// Last day of the observation window (YYYY-MM-DD).
    #[arg(long, value_parser = parse_date, value_name = "DATE")]
    pub end: Option<NaiveDate>,
    /// Token-overlap similarity threshold in (0,1].
    #[arg(long, value_name = "T")]
    pub coarse_th: Option<f64>,
    /// Embedding-similarity threshold in (0,1].
    #[arg(long, value_name = "T")]
    pub fine_th: Option<f64>,
    /// Canonical-map output (default canonical_map.csv in the output dir).
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

pub fn run_dedup(ctx: &Ctx, args: &DedupArgs) -> anyhow::Result<()> {
    let corpus_path = ctx.require_path(&args.corpus, "corpus")?;
    let emb_path = ctx.require_path(&args.embeddings, "embeddings")?;
    let window = Window::resolve(ctx, args.start, args.end)?;
    let coarse = ctx.opt(args.coarse_th, "coarse-th")?.unwrap_or(DEFAULT_COARSE);
    let fine = ctx.opt(args.fine_th, "fine-th")?.unwrap_or(DEFAULT_FINE);

    let corpus = load_corpus(&corpus_path, window.start, window.end)?;
    let (embeddings, warnings) = load_embeddings(&emb_path)?;
    for warning in &warnings {
        eprintln!("{warning}");
    }

    let vocab = phrase_vocabulary(&corpus);
    let map = build_canonical_map(&vocab, &embeddings, coarse, fine)?;

    let out = resolve_out(&ctx.out_dir, args.out.as_deref(), "canonical_map.csv");
    let mut w = create_out(&out)?;
    map.write_csv(&mut w)?;
    finish(w, &out)?;

    let rewritten = apply_canonical_map(&corpus, &map);
    let corpus_out = resolve_out(&ctx.out_dir, None, "corpus_dedup.jsonl");
    let mut w = create_out(&corpus_out)?;
    corpus::write_jsonl(&rewritten, &mut w)?;
    finish(w, &corpus_out)?;

    println!("phrases={}", vocab.len());
    println!("clusters={}", map.clusters().len());
    println!("merged={}", vocab.len() - map.clusters().len());
    println!("records_in={}", corpus.records.len());
    println!("records_out={}", rewritten.records.len());

    let mut m = Manifest::new("dedup");
    m.input("corpus", &corpus_path);
    m.input("embeddings", &emb_path);
    m.output("map", &out.name);
    m.output("corpus", &corpus_out.name);
    m.config("start", window.start);
    m.config("end", window.end);
    m.config("coarse-th", coarse);
    m.config("fine-th", fine);
    m.write(&ctx.out_dir)?;
    Ok(())
}
