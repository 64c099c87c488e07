//! Phrase deduplication: coarse token-overlap similarity, fine embedding-cosine
//! similarity, and canonicalization of the corpus vocabulary.
//!
//! Coarse similarity is |P1 ∩ P2| / max(|P1|, |P2|) over token multisets; fine
//! similarity is the cross-pair cosine sum Σ cos(w1, w2) / (|P1| + |P2|).
//! Phrases linked by either score above its threshold are clustered via
//! connected components, and each cluster is replaced by its most frequent
//! member.

use crate::corpus::{Corpus, Phrase, Triple, TripleRecord};
use rayon::prelude::*;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::File;
use std::io::{self, BufRead, BufReader, Read, Write};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DedupError {
    #[error("cannot open {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("embedding file {path} line {line}: expected {expected} components, found {found}")]
    DimensionMismatch {
        path: String,
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("embedding file {path} line {line}: {reason}")]
    Malformed {
        path: String,
        line: usize,
        reason: String,
    },
    #[error("embedding file {path} contains no vectors")]
    EmptyEmbeddings { path: String },
    #[error("threshold {value} outside (0, 1]")]
    InvalidThreshold { value: f64 },
    #[error("phrase vocabulary is empty")]
    EmptyVocabulary,
    #[error("canonical map csv: {0}")]
    MapFormat(String),
    #[error("write failed: {0}")]
    Write(#[from] io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Token → vector table of fixed dimension.
#[derive(Debug, Clone)]
pub struct EmbeddingTable {
    dimension: usize,
    vectors: HashMap<String, Vec<f64>>,
}

impl EmbeddingTable {
    pub fn new(dimension: usize) -> EmbeddingTable {
        EmbeddingTable {
            dimension,
            vectors: HashMap::new(),
        }
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// Insert a vector; returns false (keeping the original) if the token is
    /// already present.
    pub fn insert(&mut self, token: &str, vector: Vec<f64>) -> bool {
        assert_eq!(vector.len(), self.dimension, "vector dimension mismatch");
        if self.vectors.contains_key(token) {
            return false;
        }
        self.vectors.insert(token.to_string(), vector);
        true
    }

    pub fn get(&self, token: &str) -> Option<&[f64]> {
        self.vectors.get(token).map(Vec::as_slice)
    }

    pub fn contains(&self, token: &str) -> bool {
        self.vectors.contains_key(token)
    }

    /// True when every token of the phrase has a vector.
    pub fn covers(&self, p: &Phrase) -> bool {
        p.tokens().iter().all(|t| self.contains(t))
    }
}

/// Cosine similarity; zero vectors have no direction, so their cosine is 0.
fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let mut dot = 0.0;
    let mut na = 0.0;
    let mut nb = 0.0;
    for (x, y) in a.iter().zip(b) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na.sqrt() * nb.sqrt())
    }
}

/// Parse a whitespace-delimited embedding file: an optional `vocab dimension`
/// header, then one `token v1 .. vd` row per line. Duplicate tokens keep the
/// first occurrence; warnings describe the dropped lines.
pub fn load_embeddings(path: &Path) -> Result<(EmbeddingTable, Vec<String>), DedupError> {
    let file = File::open(path).map_err(|e| DedupError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    load_embeddings_reader(BufReader::new(file), &path.display().to_string())
}

/// Reader-based variant of [`load_embeddings`]; `label` names the input in
/// error messages.
pub fn load_embeddings_reader<R: BufRead>(
    reader: R,
    label: &str,
) -> Result<(EmbeddingTable, Vec<String>), DedupError> {
    let mut table: Option<EmbeddingTable> = None;
    let mut warnings = Vec::new();
    let mut first_content_line = true;

    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| DedupError::Io {
            path: label.to_string(),
            source: e,
        })?;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }

        // A leading `vocab_size dimension` header is two bare integers.
        if first_content_line
            && fields.len() == 2
            && fields.iter().all(|f| f.parse::<usize>().is_ok())
        {
            first_content_line = false;
            continue;
        }
        first_content_line = false;

        if fields.len() < 2 {
            return Err(DedupError::Malformed {
                path: label.to_string(),
                line: line_no,
                reason: "expected token followed by vector components".to_string(),
            });
        }
        let token = fields[0];
        let mut vector = Vec::with_capacity(fields.len() - 1);
        for f in &fields[1..] {
            let v: f64 = f.parse().map_err(|_| DedupError::Malformed {
                path: label.to_string(),
                line: line_no,
                reason: format!("non-numeric component {f:?}"),
            })?;
            if !v.is_finite() {
                return Err(DedupError::Malformed {
                    path: label.to_string(),
                    line: line_no,
                    reason: format!("non-finite component {f:?}"),
                });
            }
            vector.push(v);
        }

        let table = table.get_or_insert_with(|| EmbeddingTable::new(vector.len()));
        if vector.len() != table.dimension {
            return Err(DedupError::DimensionMismatch {
                path: label.to_string(),
                line: line_no,
                expected: table.dimension,
                found: vector.len(),
            });
        }
        if !table.insert(token, vector) {
            warnings.push(format!(
                "{label}:{line_no}: duplicate token {token:?}, keeping first occurrence"
            ));
        }
    }

    match table {
        Some(t) if !t.is_empty() => Ok((t, warnings)),
        _ => Err(DedupError::EmptyEmbeddings {
            path: label.to_string(),
        }),
    }
}

/// Coarse similarity: multiset token intersection over the longer length.
/// Each shared distinct token contributes min(multiplicity in P1, in P2).
pub fn coarse_similarity(p1: &Phrase, p2: &Phrase) -> f64 {
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for t in p1.tokens() {
        *counts.entry(t.as_str()).or_insert(0) += 1;
    }
    let mut shared = 0usize;
    for t in p2.tokens() {
        if let Some(c) = counts.get_mut(t.as_str()) {
            if *c > 0 {
                *c -= 1;
                shared += 1;
            }
        }
    }
    shared as f64 / p1.len().max(p2.len()) as f64
}

/// Fine similarity value plus a flag marking that one phrase was entirely
/// out-of-vocabulary (in which case the value is 0).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FineSimilarity {
    pub value: f64,
    pub fully_oov: bool,
}

/// Fine similarity: Σ over cross pairs of cos(w1, w2), divided by |P1| + |P2|.
/// Out-of-vocabulary tokens are skipped in the sum but still counted in the
/// denominator; identical in-vocabulary phrases therefore score near 0.5, and
/// the fine threshold default is chosen below that ceiling.
pub fn fine_similarity(p1: &Phrase, p2: &Phrase, emb: &EmbeddingTable) -> FineSimilarity {
    // Order the arguments canonically so the floating-point summation order —
    // and therefore the result — is bit-identical under argument swap.
    let (p1, p2) = if p1 <= p2 { (p1, p2) } else { (p2, p1) };
    let v1: Vec<Option<&[f64]>> = p1.tokens().iter().map(|t| emb.get(t)).collect();
    let v2: Vec<Option<&[f64]>> = p2.tokens().iter().map(|t| emb.get(t)).collect();
    if v1.iter().all(Option::is_none) || v2.iter().all(Option::is_none) {
        return FineSimilarity {
            value: 0.0,
            fully_oov: true,
        };
    }
    let mut sum = 0.0;
    for a in v1.iter().flatten() {
        for b in v2.iter().flatten() {
            sum += cosine(a, b);
        }
    }
    FineSimilarity {
        value: sum / (p1.len() + p2.len()) as f64,
        fully_oov: false,
    }
}

/// Disjoint-set forest with path compression; union by arbitrary (first root
/// wins) order, applied sequentially so components are order-independent.
struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> UnionFind {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, x: usize) -> usize {
        let mut root = x;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        let mut cur = x;
        while self.parent[cur] != root {
            let next = self.parent[cur];
            self.parent[cur] = root;
            cur = next;
        }
        root
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // Lower root index wins, keeping components stable across runs.
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}

/// Partition of the vocabulary plus the phrase → representative mapping.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CanonicalMap {
    representative: BTreeMap<Phrase, Phrase>,
    clusters: Vec<Vec<Phrase>>,
}

impl CanonicalMap {
    /// Identity map over nothing: every lookup falls back to the input.
    pub fn identity() -> CanonicalMap {
        CanonicalMap {
            representative: BTreeMap::new(),
            clusters: Vec::new(),
        }
    }

    /// Representative of `p`; phrases outside the map represent themselves.
    pub fn representative_of(&self, p: &Phrase) -> Phrase {
        self.representative.get(p).cloned().unwrap_or_else(|| p.clone())
    }

    pub fn clusters(&self) -> &[Vec<Phrase>] {
        &self.clusters
    }

    pub fn mappings(&self) -> impl Iterator<Item = (&Phrase, &Phrase)> {
        self.representative.iter()
    }

    pub fn len(&self) -> usize {
        self.representative.len()
    }

    pub fn is_empty(&self) -> bool {
        self.representative.is_empty()
    }

    /// Write `phrase,representative` CSV rows for every mapping.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), DedupError> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["phrase", "representative"])?;
        for (p, rep) in &self.representative {
            wtr.write_record([p.text(), rep.text()])?;
        }
        wtr.flush()?;
        Ok(())
    }

    /// Read a `phrase,representative` CSV produced by [`CanonicalMap::write_csv`].
    pub fn read_csv<R: Read>(r: R) -> Result<CanonicalMap, DedupError> {
        let mut rdr = csv::Reader::from_reader(r);
        let headers = rdr.headers()?.clone();
        if headers.iter().collect::<Vec<_>>() != ["phrase", "representative"] {
            return Err(DedupError::MapFormat(format!(
                "expected header phrase,representative, found {headers:?}"
            )));
        }
        let mut representative = BTreeMap::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec?;
            if rec.len() != 2 {
                return Err(DedupError::MapFormat(format!("row {}: expected 2 fields", i + 2)));
            }
            let p = Phrase::parse(&rec[0])
                .ok_or_else(|| DedupError::MapFormat(format!("row {}: empty phrase", i + 2)))?;
            let rep = Phrase::parse(&rec[1])
                .ok_or_else(|| DedupError::MapFormat(format!("row {}: empty representative", i + 2)))?;
            representative.insert(p, rep);
        }
        let mut by_rep: BTreeMap<Phrase, Vec<Phrase>> = BTreeMap::new();
        for (p, rep) in &representative {
            by_rep.entry(rep.clone()).or_default().push(p.clone());
        }
        Ok(CanonicalMap {
            representative,
            clusters: by_rep.into_values().collect(),
        })
    }
}

/// Count how often each distinct phrase occurs as a head, relation, or tail.
pub fn phrase_vocabulary(c: &Corpus) -> Vec<(Phrase, u64)> {
    let mut freq: BTreeMap<Phrase, u64> = BTreeMap::new();
    for r in &c.records {
        for p in [&r.triple.head, &r.triple.relation, &r.triple.tail] {
            *freq.entry(p.clone()).or_insert(0) += 1;
        }
    }
    freq.into_iter().collect()
}

/// Cluster the vocabulary by linking pairs whose coarse similarity reaches
/// `coarse_threshold` or whose fine similarity reaches `fine_threshold`;
/// clusters are connected components of the links, represented by their most
/// frequent member (ties broken by phrase order).
///
/// Candidate pairs are blocked to phrases sharing at least one token plus
/// pairs that are both fully in-vocabulary, avoiding the full O(V²) scan.
pub fn build_canonical_map(
    vocab: &[(Phrase, u64)],
    emb: &EmbeddingTable,
    coarse_threshold: f64,
    fine_threshold: f64,
) -> Result<CanonicalMap, DedupError> {
    for th in [coarse_threshold, fine_threshold] {
        if !(th > 0.0 && th <= 1.0) {
            return Err(DedupError::InvalidThreshold { value: th });
        }
    }
    if vocab.is_empty() {
        return Err(DedupError::EmptyVocabulary);
    }

    // Token blocking: bucket phrase indices by token, plus one bucket of
    // fully-in-vocabulary phrases for the fine stage.
    let mut by_token: HashMap<&str, Vec<usize>> = HashMap::new();
    let mut in_vocab: Vec<usize> = Vec::new();
    for (i, (p, _)) in vocab.iter().enumerate() {
        for t in BTreeSet::from_iter(p.tokens()) {
            by_token.entry(t.as_str()).or_default().push(i);
        }
        if emb.covers(p) {
            in_vocab.push(i);
        }
    }
    let mut candidates: BTreeSet<(usize, usize)> = BTreeSet::new();
    for bucket in by_token.values() {
        for (k, &i) in bucket.iter().enumerate() {
            for &j in &bucket[k + 1..] {
                candidates.insert((i.min(j), i.max(j)));
            }
        }
    }
    for (k, &i) in in_vocab.iter().enumerate() {
        for &j in &in_vocab[k + 1..] {
            candidates.insert((i.min(j), i.max(j)));
        }
    }

    let pairs: Vec<(usize, usize)> = candidates.into_iter().collect();
    let linked: Vec<bool> = pairs
        .par_iter()
        .map(|&(i, j)| {
            let (p1, p2) = (&vocab[i].0, &vocab[j].0);
            coarse_similarity(p1, p2) >= coarse_threshold
                || fine_similarity(p1, p2, emb).value >= fine_threshold
        })
        .collect();

    let mut uf = UnionFind::new(vocab.len());
    for (&(i, j), &is_link) in pairs.iter().zip(&linked) {
        if is_link {
            uf.union(i, j);
        }
    }

    let mut members: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..vocab.len() {
        members.entry(uf.find(i)).or_default().push(i);
    }

    let mut representative = BTreeMap::new();
    let mut clusters = Vec::with_capacity(members.len());
    for ids in members.values() {
        let rep_id = *ids
            .iter()
            .max_by(|&&a, &&b| {
                vocab[a]
                    .1
                    .cmp(&vocab[b].1)
                    // On equal frequency prefer the smaller phrase, so take
                    // the max of (freq, Reverse(phrase)).
                    .then_with(|| vocab[b].0.cmp(&vocab[a].0))
            })
            .unwrap();
        let rep = vocab[rep_id].0.clone();
        let mut cluster = Vec::with_capacity(ids.len());
        for &i in ids {
            representative.insert(vocab[i].0.clone(), rep.clone());
            cluster.push(vocab[i].0.clone());
        }
        clusters.push(cluster);
    }
    Ok(CanonicalMap {
        representative,
        clusters,
    })
}

/// Replace every phrase by its representative and collapse records that
/// become exact (head, relation, tail, day) duplicates within the same day,
/// keeping the first occurrence.
pub fn apply_canonical_map(c: &Corpus, m: &CanonicalMap) -> Corpus {
    let mut seen: BTreeSet<(Triple, u32)> = BTreeSet::new();
    let mut records = Vec::with_capacity(c.records.len());
    for r in &c.records {
        let triple = Triple::new(
            m.representative_of(&r.triple.head),
            m.representative_of(&r.triple.relation),
            m.representative_of(&r.triple.tail),
        );
        if seen.insert((triple.clone(), r.day)) {
            records.push(TripleRecord {
                triple,
                day: r.day,
                source: r.source.clone(),
                article_id: r.article_id.clone(),
            });
        }
    }
    Corpus::new(records, c.start_date, c.horizon).expect("days already validated")
}
