//! Ingestion of time-stamped triple records and per-day bucketing.
//!
//! Input is line-delimited JSON, one record per line, with fields `head`,
//! `relation`, `tail`, `date` (YYYY-MM-DD), `source`, `article_id`. Records
//! are normalized (lowercased, whitespace-collapsed) and bucketed into day
//! indices relative to a declared start date.

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::fmt;
use std::fs::File;
use std::io::{self, BufRead, BufReader, Write};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot open {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("start date {start} is after end date {end}")]
    InvalidDateRange { start: NaiveDate, end: NaiveDate },
    #[error("no valid records in [{start}, {end}]")]
    NoValidRecords { start: NaiveDate, end: NaiveDate },
    #[error("record day {day} outside horizon 1..={horizon}")]
    DayOutOfRange { day: u32, horizon: u32 },
    #[error("source group is empty")]
    EmptySourceGroup,
    #[error("write failed: {0}")]
    Write(#[from] io::Error),
}

/// An ordered list of lowercase tokens; the unit of node/edge labels.
///
/// Always non-empty, tokens never empty. Construct via [`Phrase::parse`],
/// which lowercases and collapses whitespace.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Phrase {
    tokens: Vec<String>,
}

impl Phrase {
    /// Normalize raw text into a phrase. Returns `None` if no tokens remain.
    pub fn parse(text: &str) -> Option<Phrase> {
        let tokens: Vec<String> = text.split_whitespace().map(|t| t.to_lowercase()).collect();
        if tokens.is_empty() {
            None
        } else {
            Some(Phrase { tokens })
        }
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    /// Number of tokens (with multiplicity).
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        false // invariant: never empty
    }

    /// Space-joined surface form.
    pub fn text(&self) -> String {
        self.tokens.join(" ")
    }
}

impl fmt::Display for Phrase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.tokens.join(" "))
    }
}

/// One (head, relation, tail) assertion.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Triple {
    pub head: Phrase,
    pub relation: Phrase,
    pub tail: Phrase,
}

impl Triple {
    pub fn new(head: Phrase, relation: Phrase, tail: Phrase) -> Triple {
        Triple { head, relation, tail }
    }

    /// Total token count across head, relation and tail.
    pub fn token_count(&self) -> usize {
        self.head.len() + self.relation.len() + self.tail.len()
    }
}

impl fmt::Display for Triple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} -> {} -> {}", self.head, self.relation, self.tail)
    }
}

/// One dated, sourced triple assertion; the atomic unit of the stream.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TripleRecord {
    pub triple: Triple,
    /// 1-based day index relative to the corpus start date.
    pub day: u32,
    pub source: String,
    pub article_id: String,
}

/// Immutable, day-bucketed triple stream over a fixed horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub records: Vec<TripleRecord>,
    pub start_date: NaiveDate,
    /// Number of days covered (N); record days lie in 1..=horizon.
    pub horizon: u32,
    /// Outlets observed among the records.
    pub sources: BTreeSet<String>,
    /// Per-day token totals over head+relation+tail of each record.
    pub word_counts: Vec<u64>,
}

impl Corpus {
    /// Assemble a corpus, recomputing `sources` and `word_counts`.
    pub fn new(
        records: Vec<TripleRecord>,
        start_date: NaiveDate,
        horizon: u32,
    ) -> Result<Corpus, CorpusError> {
        for r in &records {
            if r.day < 1 || r.day > horizon {
                return Err(CorpusError::DayOutOfRange { day: r.day, horizon });
            }
        }
        let sources = records.iter().map(|r| r.source.clone()).collect();
        let mut corpus = Corpus {
            records,
            start_date,
            horizon,
            sources,
            word_counts: Vec::new(),
        };
        corpus.word_counts = daily_word_counts(&corpus);
        Ok(corpus)
    }

    /// Calendar date of a 1-based day index.
    pub fn date_of_day(&self, day: u32) -> NaiveDate {
        self.start_date + chrono::Duration::days(i64::from(day) - 1)
    }
}

/// One rejected input line: line number (1-based) and reason.
#[derive(Debug, Clone)]
pub struct LineError {
    pub line: usize,
    pub reason: String,
}

/// What ingest dropped and why.
#[derive(Debug, Clone, Default)]
pub struct SkipReport {
    /// Records with a valid date outside [start, end].
    pub out_of_range: usize,
    /// Lines rejected for structural reasons (bad JSON, missing fields,
    /// unparsable dates, empty phrases).
    pub rejected: Vec<LineError>,
}

impl SkipReport {
    pub fn total_skipped(&self) -> usize {
        self.out_of_range + self.rejected.len()
    }

    /// Render the report as text, one line per rejected record.
    pub fn render(&self) -> String {
        let mut out = format!(
            "skipped {} record(s): {} out of date range, {} rejected\n",
            self.total_skipped(),
            self.out_of_range,
            self.rejected.len()
        );
        for e in &self.rejected {
            out.push_str(&format!("  line {}: {}\n", e.line, e.reason));
        }
        out
    }
}

#[derive(Deserialize)]
struct RawRecord {
    head: String,
    relation: String,
    tail: String,
    date: String,
    source: String,
    article_id: Option<String>,
}

#[derive(Serialize)]
struct RawRecordOut<'a> {
    head: String,
    relation: String,
    tail: String,
    date: String,
    source: &'a str,
    article_id: &'a str,
}

/// Ingest a line-delimited record file, keeping records dated within
/// `[start_date, end_date]`. Day index = (date - start_date) + 1.
///
/// Malformed lines are rejected individually and reported; zero valid
/// records is a hard error.
pub fn ingest(
    path: &Path,
    start_date: NaiveDate,
    end_date: NaiveDate,
) -> Result<(Corpus, SkipReport), CorpusError> {
    let file = File::open(path).map_err(|e| CorpusError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    let label = path.display().to_string();
    ingest_reader(BufReader::new(file), &label, start_date, end_date)
}

/// Ingest from any buffered reader; `label` names the input in synthesized
/// article ids and error messages.
pub fn ingest_reader<R: BufRead>(
    reader: R,
    label: &str,
    start_date: NaiveDate,
    end_date: NaiveDate,
) -> Result<(Corpus, SkipReport), CorpusError> {
    if start_date > end_date {
        return Err(CorpusError::InvalidDateRange {
            start: start_date,
            end: end_date,
        });
    }
    let horizon = (end_date - start_date).num_days() as u32 + 1;

    let mut records = Vec::new();
    let mut report = SkipReport::default();

    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| CorpusError::Io {
            path: label.to_string(),
            source: e,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawRecord = match serde_json::from_str(&line) {
            Ok(r) => r,
            Err(e) => {
                report.rejected.push(LineError {
                    line: line_no,
                    reason: e.to_string(),
                });
                continue;
            }
        };
        let date = match NaiveDate::parse_from_str(&raw.date, "%Y-%m-%d") {
            Ok(d) => d,
            Err(_) => {
                report.rejected.push(LineError {
                    line: line_no,
                    reason: format!("unparsable date {:?}", raw.date),
                });
                continue;
            }
        };
        if date < start_date || date > end_date {
            report.out_of_range += 1;
            continue;
        }
        let phrases = (
            Phrase::parse(&raw.head),
            Phrase::parse(&raw.relation),
            Phrase::parse(&raw.tail),
        );
        let (head, relation, tail) = match phrases {
            (Some(h), Some(r), Some(t)) => (h, r, t),
            _ => {
                report.rejected.push(LineError {
                    line: line_no,
                    reason: "empty head/relation/tail after normalization".to_string(),
                });
                continue;
            }
        };
        let day = (date - start_date).num_days() as u32 + 1;
        let article_id = raw
            .article_id
            .filter(|s| !s.is_empty())
            .unwrap_or_else(|| format!("{label}:{line_no}"));
        records.push(TripleRecord {
            triple: Triple::new(head, relation, tail),
            day,
            source: raw.source,
            article_id,
        });
    }

    if records.is_empty() {
        return Err(CorpusError::NoValidRecords {
            start: start_date,
            end: end_date,
        });
    }
    let corpus = Corpus::new(records, start_date, horizon)?;
    Ok((corpus, report))
}

/// Keep exactly the records whose source is in `group`. Horizon and start
/// date are unchanged; an empty result is valid (callers should warn).
pub fn filter_by_sources(c: &Corpus, group: &BTreeSet<String>) -> Result<Corpus, CorpusError> {
    if group.is_empty() {
        return Err(CorpusError::EmptySourceGroup);
    }
    let records = c
        .records
        .iter()
        .filter(|r| group.contains(&r.source))
        .cloned()
        .collect();
    Corpus::new(records, c.start_date, c.horizon)
}

/// Per-day total token count over head+relation+tail of each record.
///
/// This is a proxy for article word counts: raw article text is not part of
/// the stream, so only the tokens retained in the triples are counted.
pub fn daily_word_counts(c: &Corpus) -> Vec<u64> {
    let mut counts = vec![0u64; c.horizon as usize];
    for r in &c.records {
        counts[(r.day - 1) as usize] += r.triple.token_count() as u64;
    }
    counts
}

/// Write the word-count report: a proxy note, then `day,word_count` rows.
pub fn write_word_counts<W: Write>(mut w: W, counts: &[u64]) -> Result<(), CorpusError> {
    writeln!(
        w,
        "# word counts are token totals over stored triples, not raw article text"
    )?;
    writeln!(w, "day,word_count")?;
    for (i, c) in counts.iter().enumerate() {
        writeln!(w, "{},{}", i + 1, c)?;
    }
    Ok(())
}

/// Serialize a corpus back to the line-delimited input format.
pub fn write_jsonl<W: Write>(c: &Corpus, mut w: W) -> Result<(), CorpusError> {
    for r in &c.records {
        let out = RawRecordOut {
            head: r.triple.head.text(),
            relation: r.triple.relation.text(),
            tail: r.triple.tail.text(),
            date: c.date_of_day(r.day).format("%Y-%m-%d").to_string(),
            source: &r.source,
            article_id: &r.article_id,
        };
        serde_json::to_writer(&mut w, &out).map_err(io::Error::from)?;
        writeln!(w)?;
    }
    Ok(())
}
