//! `fit` (maximum-likelihood parameter estimation) and `intensity`
//! (seed-averaged conditional-intensity curves under fitted parameters).

use std::fs::File;
use std::io::{BufReader, Write};
use std::path::PathBuf;

use anyhow::Context;
use clap::Args;

use newsflow_core::analysis::{average_intensity, normalize_series, EVENT_TYPES};
use newsflow_core::graph::{write_count_series, CountSeries};
use newsflow_core::hawkes::{fit_mle, read_params, write_params, DelayKernel, FitOptions};

use crate::config::{usage_err, Ctx};
use crate::manifest::{resolve_out, Manifest};

use super::{create_out, finish, read_counts};

pub const DEFAULT_BETA: f64 = 0.5;

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Count series to fit (output of `count` or `simulate`).
    #[arg(long, value_name = "FILE")]
    pub counts: Option<PathBuf>,
    /// Delay-kernel decay rate.
    #[arg(long, value_name = "B")]
    pub beta: Option<f64>,
    /// Divide each event type by its pooled mean before fitting.
    #[arg(long)]
    pub normalize: bool,
    /// Hold the infectivity matrix at zero (independent Poisson baselines).
    #[arg(long)]
    pub no_excitation: bool,
    /// Convergence threshold on the log-likelihood improvement.
    #[arg(long, value_name = "T")]
    pub tol: Option<f64>,
    /// Iteration cap for the optimizer.
    #[arg(long, value_name = "N")]
    pub max_iters: Option<usize>,
    /// Lower clamp applied to baseline rates.
    #[arg(long, value_name = "F")]
    pub mu_floor: Option<f64>,
    /// Fitted-parameter output (default params.csv in the output dir).
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

pub fn run_fit(ctx: &Ctx, args: &FitArgs) -> anyhow::Result<()> {
    let counts_path = args
        .counts
        .clone()
        .ok_or_else(|| usage_err("missing required flag --counts"))?;
    let beta = ctx.opt(args.beta, "beta")?.unwrap_or(DEFAULT_BETA);
    let opts = FitOptions {
        max_iters: ctx.opt(args.max_iters, "max-iters")?.unwrap_or(5000),
        tol: ctx.opt(args.tol, "tol")?.unwrap_or(1e-8),
        mu_floor: ctx.opt(args.mu_floor, "mu-floor")?.unwrap_or(1e-8),
        init: None,
        disable_excitation: args.no_excitation,
    };

    let mut series = read_counts(&counts_path)?;
    let mut normalized_name: Option<String> = None;
    if args.normalize {
        let normalization = normalize_series(&series)?;
        for (m, &degenerate) in normalization.degenerate.iter().enumerate() {
            if degenerate {
                eprintln!(
                    "warning: event type {} has no events; left unscaled",
                    EVENT_TYPES[m]
                );
            }
        }
        series = normalization.series;
        let norm_out = resolve_out(&ctx.out_dir, None, "counts_normalized.csv");
        let mut w = create_out(&norm_out)?;
        write_count_series(&series, &mut w)?;
        finish(w, &norm_out)?;
        normalized_name = Some(norm_out.name);
    }

    let data: Vec<Vec<Vec<f64>>> = series.iter().map(CountSeries::to_rows).collect();
    let kernel = DelayKernel::new(beta)?;
    let (params, report) = fit_mle(&data, &kernel, &opts)?;

    let out = resolve_out(&ctx.out_dir, args.out.as_deref(), "params.csv");
    let mut w = create_out(&out)?;
    write_params(&params, &mut w)?;
    finish(w, &out)?;

    let report_out = resolve_out(&ctx.out_dir, None, "fit_report.txt");
    let mut w = create_out(&report_out)?;
    w.write_all(report.render().as_bytes())
        .with_context(|| format!("cannot write {}", report_out.path.display()))?;
    finish(w, &report_out)?;

    print!("{}", report.render());

    let mut m = Manifest::new("fit");
    m.input("counts", &counts_path);
    m.output("params", &out.name);
    m.output("report", &report_out.name);
    if let Some(name) = &normalized_name {
        m.output("counts_normalized", name);
    }
    m.config("beta", beta);
    m.config("max-iters", opts.max_iters);
    m.config("mu-floor", opts.mu_floor);
    m.config("no-excitation", args.no_excitation);
    m.config("normalize", args.normalize);
    m.config("tol", opts.tol);
    m.write(&ctx.out_dir)?;
    Ok(())
}

#[derive(Debug, Args)]
pub struct IntensityArgs {
    /// Fitted parameters (output of `fit`).
    #[arg(long, value_name = "FILE")]
    pub params: Option<PathBuf>,
    /// Count series the intensities are conditioned on.
    #[arg(long, value_name = "FILE")]
    pub counts: Option<PathBuf>,
    /// Delay-kernel decay rate.
    #[arg(long, value_name = "B")]
    pub beta: Option<f64>,
    /// Intensity-curve output (default intensity.csv in the output dir).
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

pub fn run_intensity(ctx: &Ctx, args: &IntensityArgs) -> anyhow::Result<()> {
    let params_path = args
        .params
        .clone()
        .ok_or_else(|| usage_err("missing required flag --params"))?;
    let counts_path = args
        .counts
        .clone()
        .ok_or_else(|| usage_err("missing required flag --counts"))?;
    let beta = ctx.opt(args.beta, "beta")?.unwrap_or(DEFAULT_BETA);

    let file = File::open(&params_path)
        .with_context(|| format!("cannot open parameter file {}", params_path.display()))?;
    let params = read_params(BufReader::new(file))
        .with_context(|| format!("cannot parse parameter file {}", params_path.display()))?;
    let series = read_counts(&counts_path)?;
    let kernel = DelayKernel::new(beta)?;
    let avg = average_intensity(&params, &kernel, &series)?;

    let out = resolve_out(&ctx.out_dir, args.out.as_deref(), "intensity.csv");
    let mut w = create_out(&out)?;
    avg.write_csv(&mut w)?;
    finish(w, &out)?;

    println!("seeds={}", avg.seed_count);
    println!("days={}", avg.n());

    let mut m = Manifest::new("intensity");
    m.input("params", &params_path);
    m.input("counts", &counts_path);
    m.output("intensity", &out.name);
    m.config("beta", beta);
    m.write(&ctx.out_dir)?;
    Ok(())
}
