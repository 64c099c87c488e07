//! One submodule per pipeline stage; shared file plumbing lives here.

pub mod classify;
pub mod cluster;
pub mod count;
pub mod dedup;
pub mod ingest;
pub mod model;
pub mod simulate;

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use anyhow::Context;
use chrono::NaiveDate;

use newsflow_core::corpus::{self, Corpus};
use newsflow_core::graph::{self, CountSeries};

use crate::config::Ctx;
use crate::manifest::OutFile;

/// Ingest a triple stream over the configured window, reporting skipped
/// lines on standard error.
pub fn load_corpus(path: &Path, start: NaiveDate, end: NaiveDate) -> anyhow::Result<Corpus> {
    let (corpus, skips) = corpus::ingest(path, start, end)
        .with_context(|| format!("cannot ingest corpus {}", path.display()))?;
    if skips.total_skipped() > 0 {
        eprint!("{}", skips.render());
    }
    Ok(corpus)
}

pub fn read_counts(path: &Path) -> anyhow::Result<Vec<CountSeries>> {
    let file = File::open(path)
        .with_context(|| format!("cannot open count series {}", path.display()))?;
    graph::read_count_series(BufReader::new(file))
        .with_context(|| format!("cannot parse count series {}", path.display()))
}

/// Open an output file for buffered writing, creating parent directories.
pub fn create_out(out: &OutFile) -> anyhow::Result<BufWriter<File>> {
    if let Some(parent) = out.path.parent() {
        fs::create_dir_all(parent)
            .with_context(|| format!("cannot create directory {}", parent.display()))?;
    }
    let file = File::create(&out.path)
        .with_context(|| format!("cannot create {}", out.path.display()))?;
    Ok(BufWriter::new(file))
}

/// Flush explicitly so write errors surface as command failures.
pub fn finish(mut w: BufWriter<File>, out: &OutFile) -> anyhow::Result<()> {
    w.flush()
        .with_context(|| format!("cannot write {}", out.path.display()))
}

/// Per-type event totals of a count-series collection, printed as integers.
pub fn event_totals(series: &[CountSeries]) -> [f64; 3] {
    let mut totals = [0.0f64; 3];
    for s in series {
        for (m, total) in totals.iter_mut().enumerate() {
            *total += s.row(m).iter().sum::<f64>();
        }
    }
    totals
}

/// Resolved effective settings used by more than one command.
pub struct Window {
    pub start: NaiveDate,
    pub end: NaiveDate,
}

impl Window {
    pub fn resolve(
        ctx: &Ctx,
        start: Option<NaiveDate>,
        end: Option<NaiveDate>,
    ) -> anyhow::Result<Window> {
        Ok(Window {
            start: ctx.date(start, "start")?,
            end: ctx.date(end, "end")?,
        })
    }
}
