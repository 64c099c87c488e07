//! `cluster`: k-means over the flattened per-seed count series, plus an
//! optional elbow diagnostic for choosing K.

use std::path::PathBuf;

use clap::Args;

use newsflow_core::analysis::{cluster_seeds, elbow, write_elbow};

use crate::config::{usage_err, Ctx};
use crate::manifest::{resolve_out, Manifest};

use super::{create_out, finish, read_counts};

pub const DEFAULT_K: usize = 3;

#[derive(Debug, Args)]
pub struct ClusterArgs {
    /// Count series to cluster (output of `count`).
    #[arg(long, value_name = "FILE")]
    pub counts: Option<PathBuf>,
    /// Number of clusters.
    #[arg(long, value_name = "K")]
    pub k: Option<usize>,
    /// RNG seed for the k-means initialization.
    #[arg(long, value_name = "SEED")]
    pub seed: Option<u64>,
    /// Also write inertia for K = 1..=N as elbow.csv.
    #[arg(long, value_name = "N")]
    pub elbow: Option<usize>,
    /// Cluster-assignment output (default clusters.csv in the output dir).
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

pub fn run_cluster(ctx: &Ctx, args: &ClusterArgs) -> anyhow::Result<()> {
    let counts_path = args
        .counts
        .clone()
        .ok_or_else(|| usage_err("missing required flag --counts"))?;
    let k = ctx.opt(args.k, "k")?.unwrap_or(DEFAULT_K);
    let seed: u64 = ctx.require(args.seed, "seed")?;

    let series = read_counts(&counts_path)?;
    let assignment = cluster_seeds(&series, k, seed)?;

    let out = resolve_out(&ctx.out_dir, args.out.as_deref(), "clusters.csv");
    let mut w = create_out(&out)?;
    assignment.write_csv(&mut w, &series)?;
    finish(w, &out)?;

    let mut elbow_name: Option<String> = None;
    if let Some(max_k) = args.elbow {
        let rows = elbow(&series, max_k, seed)?;
        let elbow_out = resolve_out(&ctx.out_dir, None, "elbow.csv");
        let mut w = create_out(&elbow_out)?;
        write_elbow(&mut w, &rows)?;
        finish(w, &elbow_out)?;
        elbow_name = Some(elbow_out.name);
    }

    let mut sizes = vec![0usize; k];
    for &c in &assignment.assignment {
        sizes[c] += 1;
    }
    println!("k={k}");
    println!("inertia={}", assignment.inertia);
    println!("iterations={}", assignment.iterations);
    println!("converged={}", assignment.converged);
    println!(
        "sizes={}",
        sizes.iter().map(usize::to_string).collect::<Vec<_>>().join(",")
    );

    let mut m = Manifest::new("cluster");
    m.input("counts", &counts_path);
    m.output("clusters", &out.name);
    if let Some(name) = &elbow_name {
        m.output("elbow", name);
    }
    m.config("k", k);
    m.config("seed", seed);
    if let Some(max_k) = args.elbow {
        m.config("elbow", max_k);
    }
    m.write(&ctx.out_dir)?;
    Ok(())
}
