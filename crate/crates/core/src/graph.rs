//! Daily RDF graph sequence, cumulative graph, append/extend/mutate
//! classification against initial triples, and the induced count series.
//!
//! A triple arriving on day n+1 is classified against each initial triple i
//! with node pair (hᵢ, tᵢ), in priority order: Mutate when head and tail match
//! i in order but the relation differs; Append when exactly one endpoint lies
//! in {hᵢ, tᵢ} and the other is a brand-new node; Extend when the other node
//! is already in the cumulative graph; None otherwise.

use crate::corpus::{Corpus, Phrase, Triple};
use rayon::prelude::*;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{self, Read, Write};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("duplicate seed triple: {0}")]
    DuplicateSeed(String),
    #[error("seed triple not found in the seed window (days 1..={window}): {triple}")]
    SeedNotInWindow { triple: String, window: u32 },
    #[error("unknown seed id {0}")]
    UnknownSeedId(usize),
    #[error("count series csv: {0}")]
    CountFormat(String),
    #[error("write failed: {0}")]
    Write(#[from] io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Directed multigraph: phrase nodes, triple edges. Parallel edges between an
/// ordered node pair are kept only when their relations differ (edges form a
/// set of triples).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RdfGraph {
    nodes: BTreeSet<Phrase>,
    edges: BTreeSet<Triple>,
}

impl RdfGraph {
    pub fn new() -> RdfGraph {
        RdfGraph::default()
    }

    /// Insert an edge plus its endpoints; duplicate edges collapse.
    pub fn add_triple(&mut self, t: &Triple) {
        self.nodes.insert(t.head.clone());
        self.nodes.insert(t.tail.clone());
        self.edges.insert(t.clone());
    }

    pub fn contains_node(&self, p: &Phrase) -> bool {
        self.nodes.contains(p)
    }

    pub fn contains_edge(&self, t: &Triple) -> bool {
        self.edges.contains(t)
    }

    pub fn nodes(&self) -> impl Iterator<Item = &Phrase> {
        self.nodes.iter()
    }

    pub fn edges(&self) -> impl Iterator<Item = &Triple> {
        self.edges.iter()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty() && self.nodes.is_empty()
    }

    fn merge(&mut self, other: &RdfGraph) {
        for n in &other.nodes {
            self.nodes.insert(n.clone());
        }
        for e in &other.edges {
            self.edges.insert(e.clone());
        }
    }
}

/// Union of the daily graphs G(1..through_day); only grows.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CumulativeGraph {
    pub graph: RdfGraph,
    pub through_day: u32,
}

impl CumulativeGraph {
    pub fn merge_day(&mut self, g: &RdfGraph, day: u32) {
        debug_assert!(day > self.through_day, "days must merge in order");
        self.graph.merge(g);
        self.through_day = day;
    }
}

/// Structural change class of a new triple relative to one initial triple.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChangeType {
    Append,
    Extend,
    Mutate,
}

impl ChangeType {
    /// Row index in a count series: append 0, extend 1, mutate 2.
    pub fn index(self) -> usize {
        match self {
            ChangeType::Append => 0,
            ChangeType::Extend => 1,
            ChangeType::Mutate => 2,
        }
    }
}

impl fmt::Display for ChangeType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ChangeType::Append => "append",
            ChangeType::Extend => "extend",
            ChangeType::Mutate => "mutate",
        };
        write!(f, "{s}")
    }
}

/// Ordered set of tracked initial triples; ids are positions (0-based).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InitialTripleSet {
    triples: Vec<Triple>,
    id_of: BTreeMap<Triple, usize>,
}

impl InitialTripleSet {
    pub fn new(triples: Vec<Triple>) -> Result<InitialTripleSet, GraphError> {
        let mut id_of = BTreeMap::new();
        for (i, t) in triples.iter().enumerate() {
            if id_of.insert(t.clone(), i).is_some() {
                return Err(GraphError::DuplicateSeed(t.to_string()));
            }
        }
        Ok(InitialTripleSet { triples, id_of })
    }

    pub fn triples(&self) -> &[Triple] {
        &self.triples
    }

    pub fn id_of(&self, t: &Triple) -> Option<usize> {
        self.id_of.get(t).copied()
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }
}

/// 3×N event counts induced by one initial triple (rows append, extend,
/// mutate). Raw counts are integers; normalized series hold reals.
#[derive(Debug, Clone, PartialEq)]
pub struct CountSeries {
    /// 0-based id of the initial triple (exports add 1).
    pub triple_id: usize,
    pub append: Vec<f64>,
    pub extend: Vec<f64>,
    pub mutate: Vec<f64>,
}

impl CountSeries {
    pub fn zeros(triple_id: usize, n: usize) -> CountSeries {
        CountSeries {
            triple_id,
            append: vec![0.0; n],
            extend: vec![0.0; n],
            mutate: vec![0.0; n],
        }
    }

    /// Horizon N.
    pub fn n(&self) -> usize {
        self.append.len()
    }

    pub fn row(&self, m: usize) -> &[f64] {
        match m {
            0 => &self.append,
            1 => &self.extend,
            2 => &self.mutate,
            _ => panic!("event type index {m} out of range"),
        }
    }

    fn row_mut(&mut self, m: usize) -> &mut Vec<f64> {
        match m {
            0 => &mut self.append,
            1 => &mut self.extend,
            2 => &mut self.mutate,
            _ => panic!("event type index {m} out of range"),
        }
    }

    pub fn add(&mut self, class: ChangeType, day: u32) {
        self.row_mut(class.index())[(day - 1) as usize] += 1.0;
    }

    /// M×N matrix view (3 rows) for the process model.
    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        vec![self.append.clone(), self.extend.clone(), self.mutate.clone()]
    }

    /// Concatenated append‖extend‖mutate vector of length 3N.
    pub fn flatten(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(3 * self.n());
        v.extend_from_slice(&self.append);
        v.extend_from_slice(&self.extend);
        v.extend_from_slice(&self.mutate);
        v
    }
}

/// One graph per day 1..=horizon; G(n) holds the distinct triples of day n.
pub fn build_graph_sequence(c: &Corpus) -> Vec<RdfGraph> {
    let mut seq = vec![RdfGraph::new(); c.horizon as usize];
    for r in &c.records {
        seq[(r.day - 1) as usize].add_triple(&r.triple);
    }
    seq
}

/// Classify `t` against initial triple `seed` given the cumulative graph of
/// all previous days. `None` means the arrival touches no tracked structure
/// of this seed.
pub fn classify_triple(t: &Triple, seed: &Triple, cum: &CumulativeGraph) -> Option<ChangeType> {
    if t.head == seed.head && t.tail == seed.tail {
        if t.relation != seed.relation {
            return Some(ChangeType::Mutate);
        }
        return None;
    }
    let head_in = t.head == seed.head || t.head == seed.tail;
    let tail_in = t.tail == seed.head || t.tail == seed.tail;
    if head_in == tail_in {
        return None; // both endpoints inside the seed pair, or neither
    }
    let other = if head_in { &t.tail } else { &t.head };
    if cum.graph.contains_node(other) {
        Some(ChangeType::Extend)
    } else {
        Some(ChangeType::Append)
    }
}

/// Count append/extend/mutate events per initial triple per day.
///
/// Seeds must all appear within days 1..=seed_window_end. Days inside the
/// window contribute zero counts. On each later day, every distinct triple of
/// G(n) not already in the cumulative graph is classified against every seed
/// using the pre-merge cumulative state (same-day arrivals do not see each
/// other); then G(n) is merged.
pub fn count_events(
    c: &Corpus,
    seeds: &InitialTripleSet,
    seed_window_end: u32,
) -> Result<Vec<CountSeries>, GraphError> {
    let seq = build_graph_sequence(c);
    let window = seed_window_end.min(c.horizon).max(1);

    let mut cum = CumulativeGraph::default();
    for (d, g) in seq.iter().take(window as usize).enumerate() {
        cum.merge_day(g, d as u32 + 1);
    }
    for t in seeds.triples() {
        if !cum.graph.contains_edge(t) {
            return Err(GraphError::SeedNotInWindow {
                triple: t.to_string(),
                window,
            });
        }
    }

    let mut series: Vec<CountSeries> = (0..seeds.len())
        .map(|i| CountSeries::zeros(i, c.horizon as usize))
        .collect();

    for day in (window + 1)..=c.horizon {
        let g = &seq[(day - 1) as usize];
        let arrivals: Vec<&Triple> = g.edges().filter(|t| !cum.graph.contains_edge(t)).collect();
        series
            .par_iter_mut()
            .zip(seeds.triples().par_iter())
            .for_each(|(s, seed)| {
                for t in &arrivals {
                    if let Some(class) = classify_triple(t, seed, &cum) {
                        s.add(class, day);
                    }
                }
            });
        cum.merge_day(g, day);
    }
    Ok(series)
}

/// Graph induced by the selected seed triples.
pub fn extract_seed_subgraph(
    seeds: &InitialTripleSet,
    subset: &BTreeSet<usize>,
) -> Result<RdfGraph, GraphError> {
    let mut g = RdfGraph::new();
    for &id in subset {
        let t = seeds
            .triples()
            .get(id)
            .ok_or(GraphError::UnknownSeedId(id))?;
        g.add_triple(t);
    }
    Ok(g)
}

/// Tab-separated `head relation tail` edge list, one edge per line.
pub fn write_edge_list<W: Write>(g: &RdfGraph, mut w: W) -> Result<(), GraphError> {
    for e in g.edges() {
        writeln!(w, "{}\t{}\t{}", e.head, e.relation, e.tail)?;
    }
    Ok(())
}

/// DOT rendering for figures. With `collapse_multi` only one edge per ordered
/// node pair is kept (the relation-smallest), mirroring displays that remove
/// multi-edges.
pub fn write_dot<W: Write>(g: &RdfGraph, mut w: W, collapse_multi: bool) -> Result<(), GraphError> {
    writeln!(w, "digraph rdf {{")?;
    for n in g.nodes() {
        writeln!(w, "  \"{n}\";")?;
    }
    let mut seen_pairs: BTreeSet<(&Phrase, &Phrase)> = BTreeSet::new();
    for e in g.edges() {
        if collapse_multi && !seen_pairs.insert((&e.head, &e.tail)) {
            continue;
        }
        writeln!(w, "  \"{}\" -> \"{}\" [label=\"{}\"];", e.head, e.tail, e.relation)?;
    }
    writeln!(w, "}}")?;
    Ok(())
}

/// Format a count so that integral values print without a fraction.
pub(crate) fn fmt_count(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v}")
    }
}

/// Write `triple_id,day,append,extend,mutate` rows; triple ids are 1-based.
pub fn write_count_series<W: Write>(series: &[CountSeries], mut w: W) -> Result<(), GraphError> {
    writeln!(w, "triple_id,day,append,extend,mutate")?;
    for s in series {
        for n in 0..s.n() {
            writeln!(
                w,
                "{},{},{},{},{}",
                s.triple_id + 1,
                n + 1,
                fmt_count(s.append[n]),
                fmt_count(s.extend[n]),
                fmt_count(s.mutate[n])
            )?;
        }
    }
    Ok(())
}

/// Read count series written by [`write_count_series`]: days must be
/// contiguous from 1 and share one horizon across triples.
pub fn read_count_series<R: Read>(r: R) -> Result<Vec<CountSeries>, GraphError> {
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(r);
    let headers = rdr.headers()?.clone();
    let expected = ["triple_id", "day", "append", "extend", "mutate"];
    if headers.iter().collect::<Vec<_>>() != expected {
        return Err(GraphError::CountFormat(format!(
            "expected header {}, found {headers:?}",
            expected.join(",")
        )));
    }
    let mut by_id: BTreeMap<usize, CountSeries> = BTreeMap::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = i + 2;
        let field = |k: usize| -> Result<f64, GraphError> {
            rec[k].parse().map_err(|_| {
                GraphError::CountFormat(format!("row {row}: non-numeric field {:?}", &rec[k]))
            })
        };
        let id = field(0)? as usize;
        let day = field(1)? as usize;
        if id == 0 || day == 0 {
            return Err(GraphError::CountFormat(format!(
                "row {row}: triple_id and day are 1-based"
            )));
        }
        let s = by_id
            .entry(id - 1)
            .or_insert_with(|| CountSeries::zeros(id - 1, 0));
        if day != s.n() + 1 {
            return Err(GraphError::CountFormat(format!(
                "row {row}: expected day {}, found {day}",
                s.n() + 1
            )));
        }
        s.append.push(field(2)?);
        s.extend.push(field(3)?);
        s.mutate.push(field(4)?);
    }
    let series: Vec<CountSeries> = by_id.into_values().collect();
    if series.is_empty() {
        return Err(GraphError::CountFormat("no data rows".to_string()));
    }
    let n = series[0].n();
    if series.iter().any(|s| s.n() != n) {
        return Err(GraphError::CountFormat(
            "triples cover different horizons".to_string(),
        ));
    }
    Ok(series)
}

/// Parse a seeds file: tab-separated `head relation tail` per line, `#`
/// comments and blank lines ignored.
pub fn read_seed_triples<R: Read>(r: R) -> Result<Vec<Triple>, GraphError> {
    let mut triples = Vec::new();
    let reader = io::BufReader::new(r);
    for (idx, line) in io::BufRead::lines(&mut { reader }).enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let parts: Vec<&str> = line.split('\t').collect();
        if parts.len() != 3 {
            return Err(GraphError::CountFormat(format!(
                "seeds line {}: expected head<TAB>relation<TAB>tail",
                idx + 1
            )));
        }
        let parse = |s: &str| {
            Phrase::parse(s).ok_or_else(|| {
                GraphError::CountFormat(format!("seeds line {}: empty phrase", idx + 1))
            })
        };
        triples.push(Triple::new(parse(parts[0])?, parse(parts[1])?, parse(parts[2])?));
    }
    Ok(triples)
}
