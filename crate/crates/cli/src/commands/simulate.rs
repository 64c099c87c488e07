//! `simulate`: draw synthetic append/extend/mutate count series from given
//! Hawkes parameters; deterministic for a fixed seed.

use std::path::PathBuf;

use clap::Args;

use newsflow_core::graph::{write_count_series, CountSeries};
use newsflow_core::hawkes::{simulate, DelayKernel, HawkesParams};

use crate::config::{usage_err, Ctx};
use crate::manifest::{resolve_out, Manifest};

use super::{create_out, event_totals, finish, model::DEFAULT_BETA};

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Baseline rates, comma-separated: append,extend,mutate.
    #[arg(long, value_name = "M1,M2,M3")]
    pub mu: String,
    /// Infectivity matrix: diag:X, const:X, or three ;-separated CSV rows.
    #[arg(long = "A", value_name = "SPEC")]
    pub a: String,
    /// Delay-kernel decay rate.
    #[arg(long, value_name = "B")]
    pub beta: Option<f64>,
    /// Number of days to simulate.
    #[arg(long, value_name = "N")]
    pub days: usize,
    /// Number of independent series (seed increments by 1 for each).
    #[arg(long, default_value_t = 1, value_name = "S")]
    pub series: usize,
    /// Base RNG seed.
    #[arg(long, value_name = "SEED")]
    pub seed: Option<u64>,
    /// Simulated-series output (default sim_counts.csv in the output dir).
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

fn parse_vector(spec: &str) -> anyhow::Result<Vec<f64>> {
    spec.split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|e| usage_err(format!("invalid number {v:?}: {e}")))
        })
        .collect()
}

/// Accepts `diag:X` (X on the diagonal), `const:X` (X everywhere), or an
/// explicit matrix of `;`-separated comma rows.
fn parse_matrix(spec: &str, m: usize) -> anyhow::Result<Vec<Vec<f64>>> {
    if let Some(value) = spec.strip_prefix("diag:") {
        let x: f64 = value
            .parse()
            .map_err(|e| usage_err(format!("invalid diag value {value:?}: {e}")))?;
        let mut a = vec![vec![0.0; m]; m];
        for (i, row) in a.iter_mut().enumerate() {
            row[i] = x;
        }
        return Ok(a);
    }
    if let Some(value) = spec.strip_prefix("const:") {
        let x: f64 = value
            .parse()
            .map_err(|e| usage_err(format!("invalid const value {value:?}: {e}")))?;
        return Ok(vec![vec![x; m]; m]);
    }
    let rows: Vec<Vec<f64>> = spec
        .split(';')
        .map(parse_vector)
        .collect::<Result<_, _>>()?;
    if rows.len() != m || rows.iter().any(|r| r.len() != m) {
        return Err(usage_err(format!(
            "--A must be a {m}x{m} matrix to match --mu"
        )));
    }
    Ok(rows)
}

pub fn run_simulate(ctx: &Ctx, args: &SimulateArgs) -> anyhow::Result<()> {
    let mu = parse_vector(&args.mu)?;
    if mu.len() != 3 {
        return Err(usage_err(
            "--mu needs exactly 3 entries (append, extend, mutate rates)",
        ));
    }
    let a = parse_matrix(&args.a, mu.len())?;
    let beta = ctx.opt(args.beta, "beta")?.unwrap_or(DEFAULT_BETA);
    let seed: u64 = ctx.require(args.seed, "seed")?;
    if args.days == 0 {
        return Err(usage_err("--days must be at least 1"));
    }
    if args.series == 0 {
        return Err(usage_err("--series must be at least 1"));
    }

    let params = HawkesParams::new(mu, a)?;
    let kernel = DelayKernel::new(beta)?;

    let mut all = Vec::with_capacity(args.series);
    for i in 0..args.series {
        let mut y = simulate(&params, &kernel, args.days, seed.wrapping_add(i as u64))?;
        let mutate = y.pop().expect("three rows");
        let extend = y.pop().expect("three rows");
        let append = y.pop().expect("three rows");
        all.push(CountSeries {
            triple_id: i,
            append,
            extend,
            mutate,
        });
    }

    let out = resolve_out(&ctx.out_dir, args.out.as_deref(), "sim_counts.csv");
    let mut w = create_out(&out)?;
    write_count_series(&all, &mut w)?;
    finish(w, &out)?;

    let totals = event_totals(&all);
    println!("series={}", args.series);
    println!("days={}", args.days);
    println!("append={}", totals[0]);
    println!("extend={}", totals[1]);
    println!("mutate={}", totals[2]);

    let mut m = Manifest::new("simulate");
    m.output("counts", &out.name);
    m.config("A", &args.a);
    m.config("beta", beta);
    m.config("days", args.days);
    m.config("mu", &args.mu);
    m.config("seed", seed);
    m.config("series", args.series);
    m.write(&ctx.out_dir)?;
    Ok(())
}
