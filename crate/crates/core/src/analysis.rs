//! Count-series normalization, average conditional intensity curves, L1/L2
//! distance classification of source groups, and k-means clustering of the
//! per-seed series.

use crate::graph::CountSeries;
use crate::hawkes::{self, DelayKernel, HawkesParams};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::fmt;
use std::io::{self, BufRead, BufReader, Read, Write};
use thiserror::Error;

pub const EVENT_TYPES: [&str; 3] = ["append", "extend", "mutate"];

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("series list is empty")]
    Empty,
    #[error("curve lengths differ: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("need at least 2 references, found {0}")]
    TooFewReferences(usize),
    #[error("k = {k} outside 1..={max}")]
    BadK { k: usize, max: usize },
    #[error("intensity csv: {0}")]
    IntensityFormat(String),
    #[error(transparent)]
    Hawkes(#[from] hawkes::HawkesError),
    #[error("write failed: {0}")]
    Write(#[from] io::Error),
}

/// Per-event-type scaling outcome of [`normalize_series`].
#[derive(Debug, Clone, PartialEq)]
pub struct Normalization {
    pub series: Vec<CountSeries>,
    /// Pooled per-type means used as divisors.
    pub means: [f64; 3],
    /// Types whose counts were all zero and were left unscaled.
    pub degenerate: [bool; 3],
}

/// Divide each event type by its pooled mean over all seeds and days so the
/// three types sit on a comparable scale. All-zero types keep scale 1.
pub fn normalize_series(series_list: &[CountSeries]) -> Result<Normalization, AnalysisError> {
    if series_list.is_empty() {
        return Err(AnalysisError::Empty);
    }
    let total_days: usize = series_list.iter().map(CountSeries::n).sum();
    let mut means = [0.0f64; 3];
    let mut degenerate = [false; 3];
    for m in 0..3 {
        let sum: f64 = series_list.iter().map(|s| s.row(m).iter().sum::<f64>()).sum();
        let mean = sum / total_days as f64;
        if mean == 0.0 {
            means[m] = 1.0;
            degenerate[m] = true;
        } else {
            means[m] = mean;
        }
    }
    let series = series_list
        .iter()
        .map(|s| CountSeries {
            triple_id: s.triple_id,
            append: s.append.iter().map(|v| v / means[0]).collect(),
            extend: s.extend.iter().map(|v| v / means[1]).collect(),
            mutate: s.mutate.iter().map(|v| v / means[2]).collect(),
        })
        .collect();
    Ok(Normalization {
        series,
        means,
        degenerate,
    })
}

/// Per-type intensity averaged across seed triples: λ̄_m(n) = (1/|I|) Σ λ_m⁽ⁱ⁾(n).
#[derive(Debug, Clone, PartialEq)]
pub struct AverageIntensity {
    /// 3×N curves in append, extend, mutate order.
    pub curves: Vec<Vec<f64>>,
    pub seed_count: usize,
}

impl AverageIntensity {
    pub fn n(&self) -> usize {
        self.curves.first().map_or(0, Vec::len)
    }

    /// Write a `# seeds=K` note then `day,append,extend,mutate` rows.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<(), AnalysisError> {
        writeln!(w, "# seeds={}", self.seed_count)?;
        writeln!(w, "day,append,extend,mutate")?;
        for n in 0..self.n() {
            writeln!(
                w,
                "{},{},{},{}",
                n + 1,
                self.curves[0][n],
                self.curves[1][n],
                self.curves[2][n]
            )?;
        }
        Ok(())
    }

    /// Read curves written by [`AverageIntensity::write_csv`].
    pub fn read_csv<R: Read>(r: R) -> Result<AverageIntensity, AnalysisError> {
        let reader = BufReader::new(r);
        let mut curves = vec![Vec::new(); 3];
        let mut seed_count = 1;
        let mut saw_header = false;
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            let trimmed = line.trim();
            if trimmed.is_empty() {
                continue;
            }
            if let Some(rest) = trimmed.strip_prefix('#') {
                if let Some(v) = rest.trim().strip_prefix("seeds=") {
                    seed_count = v.trim().parse().map_err(|_| {
                        AnalysisError::IntensityFormat(format!("bad seeds note {trimmed:?}"))
                    })?;
                }
                continue;
            }
            if !saw_header {
                if trimmed != "day,append,extend,mutate" {
                    return Err(AnalysisError::IntensityFormat(format!(
                        "expected header day,append,extend,mutate, found {trimmed:?}"
                    )));
                }
                saw_header = true;
                continue;
            }
            let fields: Vec<&str> = trimmed.split(',').collect();
            if fields.len() != 4 {
                return Err(AnalysisError::IntensityFormat(format!(
                    "line {}: expected 4 fields",
                    idx + 1
                )));
            }
            let day: usize = fields[0].parse().map_err(|_| {
                AnalysisError::IntensityFormat(format!("line {}: bad day", idx + 1))
            })?;
            if day != curves[0].len() + 1 {
                return Err(AnalysisError::IntensityFormat(format!(
                    "line {}: expected day {}, found {day}",
                    idx + 1,
                    curves[0].len() + 1
                )));
            }
            for m in 0..3 {
                let v: f64 = fields[m + 1].parse().map_err(|_| {
                    AnalysisError::IntensityFormat(format!("line {}: non-numeric value", idx + 1))
                })?;
                curves[m].push(v);
            }
        }
        if curves[0].is_empty() {
            return Err(AnalysisError::IntensityFormat("no data rows".to_string()));
        }
        Ok(AverageIntensity { curves, seed_count })
    }
}

/// Compute each seed's intensity under the shared parameters, then average
/// across seeds per (type, day). All series must share one horizon.
pub fn average_intensity(
    params: &HawkesParams,
    kernel: &DelayKernel,
    series_list: &[CountSeries],
) -> Result<AverageIntensity, AnalysisError> {
    if series_list.is_empty() {
        return Err(AnalysisError::Empty);
    }
    let n = series_list[0].n();
    for s in series_list {
        if s.n() != n {
            return Err(AnalysisError::LengthMismatch {
                left: n,
                right: s.n(),
            });
        }
    }
    let per_seed: Vec<_> = series_list
        .par_iter()
        .map(|s| hawkes::intensity(params, kernel, &s.to_rows()))
        .collect::<Result<_, _>>()?;
    let mut curves = vec![vec![0.0; n]; 3];
    for lam in &per_seed {
        for (m, curve) in curves.iter_mut().enumerate() {
            for (acc, v) in curve.iter_mut().zip(lam.row(m)) {
                *acc += v;
            }
        }
    }
    let count = series_list.len() as f64;
    for row in &mut curves {
        for v in row {
            *v /= count;
        }
    }
    Ok(AverageIntensity {
        curves,
        seed_count: series_list.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Norm {
    L1,
    L2,
}

impl fmt::Display for Norm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Norm::L1 => write!(f, "L1"),
            Norm::L2 => write!(f, "L2"),
        }
    }
}

/// Per-day mean distance: L1 = (1/N) Σ |a−b|; L2 = (1/N) Σ (a−b)² (mean of
/// squared differences, no root).
pub fn curve_distance(a: &[f64], b: &[f64], norm: Norm) -> Result<f64, AnalysisError> {
    if a.len() != b.len() {
        return Err(AnalysisError::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let n = a.len() as f64;
    let sum: f64 = a
        .iter()
        .zip(b)
        .map(|(x, y)| match norm {
            Norm::L1 => (x - y).abs(),
            Norm::L2 => (x - y) * (x - y),
        })
        .sum();
    Ok(sum / n)
}

/// One row of the distance table.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceRow {
    pub event_type: &'static str,
    pub reference: String,
    pub norm: Norm,
    pub distance: f64,
}

/// Decide which reference the test group came from: compute per-type curve
/// distances to every reference and pick the label minimizing their sum.
/// Ties go to the earlier reference in list order.
pub fn classify_group(
    test: &AverageIntensity,
    references: &[(String, AverageIntensity)],
    norm: Norm,
) -> Result<(String, Vec<DistanceRow>), AnalysisError> {
    if references.len() < 2 {
        return Err(AnalysisError::TooFewReferences(references.len()));
    }
    let mut rows = Vec::with_capacity(3 * references.len());
    let mut best: Option<(f64, &str)> = None;
    for (label, reference) in references {
        let mut total = 0.0;
        for (m, &event_type) in EVENT_TYPES.iter().enumerate() {
            let d = curve_distance(&test.curves[m], &reference.curves[m], norm)?;
            total += d;
            rows.push(DistanceRow {
                event_type,
                reference: label.clone(),
                norm,
                distance: d,
            });
        }
        if best.is_none_or(|(t, _)| total < t) {
            best = Some((total, label));
        }
    }
    Ok((best.unwrap().1.to_string(), rows))
}

/// Append `dataset,event_type,reference,norm,distance` rows (header written
/// when `with_header`).
pub fn write_distance_table<W: Write>(
    mut w: W,
    dataset: &str,
    rows: &[DistanceRow],
    with_header: bool,
) -> Result<(), AnalysisError> {
    if with_header {
        writeln!(w, "dataset,event_type,reference,norm,distance")?;
    }
    for r in rows {
        writeln!(
            w,
            "{dataset},{},{},{},{}",
            r.event_type, r.reference, r.norm, r.distance
        )?;
    }
    Ok(())
}

/// K-means outcome over the flattened (append‖extend‖mutate) seed vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterAssignment {
    pub k: usize,
    /// Cluster index (0-based) per series, in input order.
    pub assignment: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
    /// Total within-cluster squared Euclidean distance.
    pub inertia: f64,
    /// Inertia after each iteration; non-increasing.
    pub inertia_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

impl ClusterAssignment {
    /// Write `triple_id,cluster` rows, both 1-based.
    pub fn write_csv<W: Write>(&self, mut w: W, series: &[CountSeries]) -> Result<(), AnalysisError> {
        writeln!(w, "triple_id,cluster")?;
        for (s, &c) in series.iter().zip(&self.assignment) {
            writeln!(w, "{},{}", s.triple_id + 1, c + 1)?;
        }
        Ok(())
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Standard k-means with Euclidean distance and a seeded random-partition
/// initialization; converges when assignments stabilize (≤ `max_iters`).
/// Empty clusters are repaired by stealing the point farthest from its
/// centroid, so k = number of points always reaches inertia 0.
pub fn cluster_seeds(
    series_list: &[CountSeries],
    k: usize,
    rng_seed: u64,
) -> Result<ClusterAssignment, AnalysisError> {
    cluster_vectors(
        &series_list.iter().map(CountSeries::flatten).collect::<Vec<_>>(),
        k,
        rng_seed,
        300,
    )
}

fn cluster_vectors(
    points: &[Vec<f64>],
    k: usize,
    rng_seed: u64,
    max_iters: usize,
) -> Result<ClusterAssignment, AnalysisError> {
    let n = points.len();
    if k < 1 || k > n {
        return Err(AnalysisError::BadK { k, max: n });
    }
    let dim = points[0].len();
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut assignment: Vec<usize> = (0..n).map(|_| rng.gen_range(0..k)).collect();
    let mut centroids = vec![vec![0.0; dim]; k];

    let mut inertia_trace = Vec::new();
    let mut iterations = 0;
    let mut converged = false;
    for iter in 1..=max_iters {
        iterations = iter;

        // centroid update: mean of members, in point order
        let mut sums = vec![vec![0.0; dim]; k];
        let mut sizes = vec![0usize; k];
        for (p, &c) in points.iter().zip(&assignment) {
            sizes[c] += 1;
            for (s, v) in sums[c].iter_mut().zip(p) {
                *s += v;
            }
        }
        for c in 0..k {
            if sizes[c] > 0 {
                centroids[c] = sums[c].iter().map(|s| s / sizes[c] as f64).collect();
            }
        }

        // repair: an empty cluster steals the point farthest from its centroid
        while let Some(empty) = (0..k).find(|&c| sizes[c] == 0) {
            let victim = (0..n)
                .filter(|&i| sizes[assignment[i]] > 1)
                .max_by(|&a, &b| {
                    sq_dist(&points[a], &centroids[assignment[a]])
                        .total_cmp(&sq_dist(&points[b], &centroids[assignment[b]]))
                        .then(b.cmp(&a)) // ties → lowest index
                })
                .expect("k <= n guarantees a donor cluster");
            let from = assignment[victim];
            sizes[from] -= 1;
            sizes[empty] = 1;
            assignment[victim] = empty;
            centroids[empty] = points[victim].clone();
            centroids[from] = {
                let members: Vec<usize> = (0..n).filter(|&i| assignment[i] == from).collect();
                let mut mean = vec![0.0; dim];
                for &i in &members {
                    for (s, v) in mean.iter_mut().zip(&points[i]) {
                        *s += v;
                    }
                }
                mean.iter().map(|s| s / members.len() as f64).collect()
            };
        }

        // assignment step: nearest centroid; ties keep the current cluster,
        // otherwise lowest index
        let next: Vec<usize> = points
            .par_iter()
            .zip(&assignment)
            .map(|(p, &cur)| {
                let mut best = cur;
                let mut best_d = sq_dist(p, &centroids[cur]);
                for (c, centroid) in centroids.iter().enumerate() {
                    let d = sq_dist(p, centroid);
                    if d < best_d || (d == best_d && c < best && cur != best) {
                        best = c;
                        best_d = d;
                    }
                }
                best
            })
            .collect();

        let inertia: f64 = points
            .iter()
            .zip(&next)
            .map(|(p, &c)| sq_dist(p, &centroids[c]))
            .sum();
        inertia_trace.push(inertia);

        if next == assignment {
            converged = true;
            break;
        }
        assignment = next;
    }

    let inertia = *inertia_trace.last().unwrap();
    Ok(ClusterAssignment {
        k,
        assignment,
        centroids,
        inertia,
        inertia_trace,
        iterations,
        converged,
    })
}

/// Inertia per candidate K, for manual elbow inspection.
pub fn elbow(
    series_list: &[CountSeries],
    max_k: usize,
    rng_seed: u64,
) -> Result<Vec<(usize, f64)>, AnalysisError> {
    let max_k = max_k.min(series_list.len()).max(1);
    (1..=max_k)
        .map(|k| cluster_seeds(series_list, k, rng_seed).map(|c| (k, c.inertia)))
        .collect()
}

/// Write `k,inertia` rows for the elbow diagnostic.
pub fn write_elbow<W: Write>(mut w: W, rows: &[(usize, f64)]) -> Result<(), AnalysisError> {
    writeln!(w, "k,inertia")?;
    for (k, inertia) in rows {
        writeln!(w, "{k},{inertia}")?;
    }
    Ok(())
}
