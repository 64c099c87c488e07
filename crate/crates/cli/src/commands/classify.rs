//! `classify`: decide which reference group a test group's intensity curves
//! are closest to, under L1 and/or L2 curve distance.

use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::Args;

use newsflow_core::analysis::{classify_group, write_distance_table, AverageIntensity, Norm};

use crate::config::{usage_err, Ctx};
use crate::manifest::{resolve_out, Manifest};

use super::{create_out, finish};

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    /// Intensity curves of the group under test (output of `intensity`).
    #[arg(long, value_name = "FILE")]
    pub test: Option<PathBuf>,
    /// Labeled reference curves, as label=path; repeat for each reference.
    #[arg(long = "reference", value_name = "LABEL=FILE")]
    pub references: Vec<String>,
    /// Distance norm: l1, l2, or both.
    #[arg(long, default_value = "both", value_name = "NORM")]
    pub norm: String,
    /// Dataset label written into the distance table.
    #[arg(long, default_value = "test", value_name = "LABEL")]
    pub dataset: String,
    /// Distance-table output (default distances.csv in the output dir).
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

fn read_intensity(path: &Path) -> anyhow::Result<AverageIntensity> {
    let file = File::open(path)
        .with_context(|| format!("cannot open intensity file {}", path.display()))?;
    AverageIntensity::read_csv(BufReader::new(file))
        .with_context(|| format!("cannot parse intensity file {}", path.display()))
}

fn parse_norms(spec: &str) -> anyhow::Result<Vec<Norm>> {
    match spec.to_ascii_lowercase().as_str() {
        "l1" => Ok(vec![Norm::L1]),
        "l2" => Ok(vec![Norm::L2]),
        "both" => Ok(vec![Norm::L1, Norm::L2]),
        other => Err(usage_err(format!(
            "--norm must be l1, l2, or both (found {other:?})"
        ))),
    }
}

pub fn run_classify(ctx: &Ctx, args: &ClassifyArgs) -> anyhow::Result<()> {
    let test_path = args
        .test
        .clone()
        .ok_or_else(|| usage_err("missing required flag --test"))?;
    if args.references.len() < 2 {
        return Err(usage_err(
            "at least two --reference label=path arguments are required",
        ));
    }
    let norms = parse_norms(&args.norm)?;

    let test = read_intensity(&test_path)?;
    let mut references: Vec<(String, AverageIntensity)> = Vec::new();
    let mut reference_paths: Vec<(String, PathBuf)> = Vec::new();
    for spec in &args.references {
        let (label, path) = spec.split_once('=').ok_or_else(|| {
            usage_err(format!("--reference expects label=path, found {spec:?}"))
        })?;
        let path = PathBuf::from(path);
        references.push((label.to_string(), read_intensity(&path)?));
        reference_paths.push((label.to_string(), path));
    }

    let out = resolve_out(&ctx.out_dir, args.out.as_deref(), "distances.csv");
    let mut w = create_out(&out)?;
    let mut first = true;
    for &norm in &norms {
        let (winner, rows) = classify_group(&test, &references, norm)?;
        write_distance_table(&mut w, &args.dataset, &rows, first)?;
        first = false;
        println!("winner.{norm}={winner}");
    }
    finish(w, &out)?;

    let mut m = Manifest::new("classify");
    m.input("test", &test_path);
    for (label, path) in &reference_paths {
        m.input(&format!("reference.{label}"), path);
    }
    m.output("distances", &out.name);
    m.config("dataset", &args.dataset);
    m.config("norm", args.norm.to_ascii_lowercase());
    m.write(&ctx.out_dir)?;
    Ok(())
}
