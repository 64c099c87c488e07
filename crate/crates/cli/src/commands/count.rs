//! `count`: classify every new triple against the tracked initial triples
//! and emit the per-seed append/extend/mutate daily count series.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufReader, Read};
use std::path::{Path, PathBuf};

use anyhow::Context;
use chrono::NaiveDate;
use clap::Args;

use newsflow_core::corpus::{filter_by_sources, Triple};
use newsflow_core::dedup::{apply_canonical_map, CanonicalMap};
use newsflow_core::graph::{
    count_events, extract_seed_subgraph, read_seed_triples, write_count_series, write_dot,
    write_edge_list, InitialTripleSet,
};

use crate::config::{parse_date, usage_err, Ctx};
use crate::manifest::{resolve_out, Manifest};

use super::{create_out, event_totals, finish, load_corpus, Window};

pub const DEFAULT_SEED_WINDOW: u32 = 1;

#[derive(Debug, Args)]
pub struct CountArgs {
    /// Triple stream to count over.
    #[arg(long, value_name = "FILE")]
    pub corpus: Option<PathBuf>,
    /// Initial triples, one tab-separated head/relation/tail per line.
    #[arg(long, value_name = "FILE")]
    pub seeds: Option<PathBuf>,
    /// First day of the observation window (YYYY-MM-DD).
    #[arg(long, value_parser = parse_date, value_name = "DATE")]
    pub start: Option<NaiveDate>,
    /// Last day of the observation window (YYYY-MM-DD).
    #[arg(long, value_parser = parse_date, value_name = "DATE")]
    pub end: Option<NaiveDate>,
    /// Canonical map applied to corpus and seeds before counting.
    #[arg(long, value_name = "FILE")]
    pub map: Option<PathBuf>,
    /// Last day of the seed window (seeds must appear by this day).
    #[arg(long, value_name = "DAY")]
    pub seed_window: Option<u32>,
    /// Outlet-group definition file (label=src1,src2 per line).
    #[arg(long, value_name = "FILE")]
    pub groups: Option<PathBuf>,
    /// Restrict the corpus to one group from the definition file.
    #[arg(long, value_name = "LABEL", requires = "groups")]
    pub group: Option<String>,
    /// Also export the subgraph spanned by these 1-based seed ids.
    #[arg(long, value_name = "IDS", value_delimiter = ',')]
    pub subgraph_ids: Option<Vec<usize>>,
    /// Collapse parallel edges in the DOT rendering.
    #[arg(long)]
    pub collapse_multi: bool,
    /// Count-series output (default counts.csv in the output dir).
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

/// Parse `label=src1,src2` group definitions; `#` comments and blank lines
/// are ignored.
pub fn read_groups(path: &Path) -> anyhow::Result<BTreeMap<String, BTreeSet<String>>> {
    let mut text = String::new();
    File::open(path)
        .and_then(|mut f| f.read_to_string(&mut text))
        .with_context(|| format!("cannot read groups file {}", path.display()))?;
    let mut groups = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (label, sources) = line.split_once('=').ok_or_else(|| {
            usage_err(format!(
                "{}:{}: expected label=src1,src2, found {line:?}",
                path.display(),
                idx + 1
            ))
        })?;
        let set: BTreeSet<String> = sources
            .split(',')
            .map(|s| s.trim().to_string())
            .filter(|s| !s.is_empty())
            .collect();
        if set.is_empty() {
            return Err(usage_err(format!(
                "{}:{}: group {label:?} lists no sources",
                path.display(),
                idx + 1
            )));
        }
        groups.insert(label.trim().to_string(), set);
    }
    if groups.is_empty() {
        return Err(usage_err(format!(
            "groups file {} defines no groups",
            path.display()
        )));
    }
    Ok(groups)
}

pub fn load_map(path: &Path) -> anyhow::Result<CanonicalMap> {
    let file =
        File::open(path).with_context(|| format!("cannot open canonical map {}", path.display()))?;
    CanonicalMap::read_csv(BufReader::new(file))
        .with_context(|| format!("cannot parse canonical map {}", path.display()))
}

pub fn load_seeds(path: &Path) -> anyhow::Result<Vec<Triple>> {
    let file =
        File::open(path).with_context(|| format!("cannot open seed file {}", path.display()))?;
    read_seed_triples(BufReader::new(file))
        .with_context(|| format!("cannot parse seed file {}", path.display()))
}

fn map_triple(t: &Triple, map: &CanonicalMap) -> Triple {
    Triple::new(
        map.representative_of(&t.head),
        map.representative_of(&t.relation),
        map.representative_of(&t.tail),
    )
}

pub fn run_count(ctx: &Ctx, args: &CountArgs) -> anyhow::Result<()> {
    let corpus_path = ctx.require_path(&args.corpus, "corpus")?;
    let seeds_path = ctx.require_path(&args.seeds, "seeds")?;
    let window = Window::resolve(ctx, args.start, args.end)?;
    let seed_window = ctx
        .opt(args.seed_window, "seed-window")?
        .unwrap_or(DEFAULT_SEED_WINDOW);

    let mut corpus = load_corpus(&corpus_path, window.start, window.end)?;

    let groups_path = if args.group.is_some() {
        Some(ctx.require_path(&args.groups, "groups")?)
    } else {
        None
    };
    if let (Some(label), Some(path)) = (&args.group, &groups_path) {
        let groups = read_groups(path)?;
        let sources = groups.get(label).ok_or_else(|| {
            usage_err(format!(
                "group {label:?} is not defined in {} (available: {})",
                path.display(),
                groups.keys().cloned().collect::<Vec<_>>().join(", ")
            ))
        })?;
        corpus = filter_by_sources(&corpus, sources)?;
    }

    let mut seed_triples = load_seeds(&seeds_path)?;
    if let Some(map_path) = &args.map {
        let map = load_map(map_path)?;
        corpus = apply_canonical_map(&corpus, &map);
        seed_triples = seed_triples.iter().map(|t| map_triple(t, &map)).collect();
    }
    let seeds = InitialTripleSet::new(seed_triples)?;

    let series = count_events(&corpus, &seeds, seed_window)?;

    let out = resolve_out(&ctx.out_dir, args.out.as_deref(), "counts.csv");
    let mut w = create_out(&out)?;
    write_count_series(&series, &mut w)?;
    finish(w, &out)?;

    let mut subgraph_outputs: Vec<(String, String)> = Vec::new();
    if let Some(ids) = &args.subgraph_ids {
        let subset: BTreeSet<usize> = ids
            .iter()
            .map(|&id| {
                id.checked_sub(1)
                    .ok_or_else(|| usage_err("seed ids are 1-based".to_string()))
            })
            .collect::<Result<_, _>>()?;
        let subgraph = extract_seed_subgraph(&seeds, &subset)?;

        let edges = resolve_out(&ctx.out_dir, None, "subgraph.tsv");
        let mut w = create_out(&edges)?;
        write_edge_list(&subgraph, &mut w)?;
        finish(w, &edges)?;
        subgraph_outputs.push(("subgraph".to_string(), edges.name));

        let dot = resolve_out(&ctx.out_dir, None, "subgraph.dot");
        let mut w = create_out(&dot)?;
        write_dot(&subgraph, &mut w, args.collapse_multi)?;
        finish(w, &dot)?;
        subgraph_outputs.push(("dot".to_string(), dot.name));
    }

    let totals = event_totals(&series);
    println!("seeds={}", seeds.len());
    println!("days={}", corpus.horizon);
    println!("append={}", totals[0]);
    println!("extend={}", totals[1]);
    println!("mutate={}", totals[2]);

    let mut m = Manifest::new("count");
    m.input("corpus", &corpus_path);
    m.input("seeds", &seeds_path);
    if let Some(map_path) = &args.map {
        m.input("map", map_path);
    }
    if let Some(path) = &groups_path {
        m.input("groups", path);
    }
    m.output("counts", &out.name);
    for (key, name) in &subgraph_outputs {
        m.output(key, name);
    }
    m.config("start", window.start);
    m.config("end", window.end);
    m.config("seed-window", seed_window);
    if let Some(label) = &args.group {
        m.config("group", label);
    }
    if let Some(ids) = &args.subgraph_ids {
        let ids: Vec<String> = ids.iter().map(usize::to_string).collect();
        m.config("subgraph-ids", ids.join(","));
        m.config("collapse-multi", args.collapse_multi);
    }
    m.write(&ctx.out_dir)?;
    Ok(())
}
