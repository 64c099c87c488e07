//! End-to-end tests of the `newsflow` binary: exit codes, output files,
//! configuration precedence, and determinism.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
}

/// A `newsflow` invocation isolated from the ambient environment.
fn newsflow() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_newsflow"));
    cmd.env_remove("NEWSFLOW_CONFIG");
    cmd
}

fn run(cmd: &mut Command) -> Output {
    cmd.output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf-8 stdout")
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).expect("utf-8 stderr")
}

#[test]
fn help_and_version_exit_zero() {
    let out = run(newsflow().arg("--help"));
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("Usage"));

    let out = run(newsflow().arg("--version"));
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn usage_errors_exit_two() {
    // unknown subcommand
    let out = run(newsflow().arg("frobnicate"));
    assert_eq!(out.status.code(), Some(2));

    // unknown flag
    let out = run(newsflow().args(["count", "--bogus"]));
    assert_eq!(out.status.code(), Some(2));

    // missing required setting (no --seeds anywhere)
    let dir = tempfile::tempdir().unwrap();
    let out = run(newsflow()
        .arg("count")
        .arg("--corpus")
        .arg(fixture("three_day_corpus.jsonl"))
        .args(["--start", "2019-01-28", "--end", "2019-01-30"])
        .arg("--out-dir")
        .arg(dir.path()));
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("--seeds"));
}

#[test]
fn module_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    // nonexistent corpus file
    let out = run(newsflow()
        .arg("count")
        .args(["--corpus", "/nonexistent.jsonl"])
        .arg("--seeds")
        .arg(fixture("three_day_seeds.txt"))
        .args(["--start", "2019-01-28", "--end", "2019-01-30"])
        .arg("--out-dir")
        .arg(dir.path()));
    assert_eq!(out.status.code(), Some(1));

    // k larger than the number of series
    let sim = run(newsflow()
        .args(["simulate", "--mu", "0.5,0.3,0.4", "--A", "diag:0.2"])
        .args(["--days", "30", "--series", "2", "--seed", "3"])
        .arg("--out-dir")
        .arg(dir.path()));
    assert_eq!(sim.status.code(), Some(0));
    let out = run(newsflow()
        .arg("cluster")
        .arg("--counts")
        .arg(dir.path().join("sim_counts.csv"))
        .args(["--k", "99", "--seed", "1"])
        .arg("--out-dir")
        .arg(dir.path()));
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn stats_reports_toy_word_counts() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(newsflow()
        .arg("stats")
        .arg("--corpus")
        .arg(fixture("toy_corpus.jsonl"))
        .args(["--start", "2019-01-28", "--end", "2019-02-01"])
        .arg("--out-dir")
        .arg(dir.path()));
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("records=12"));
    assert!(text.contains("word_counts=14,14,9,12,9"));

    let csv = fs::read_to_string(dir.path().join("word_counts.csv")).unwrap();
    assert!(csv.ends_with("1,14\n2,14\n3,9\n4,12\n5,9\n"));
}

#[test]
fn count_reproduces_three_day_example() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(newsflow()
        .arg("count")
        .arg("--corpus")
        .arg(fixture("three_day_corpus.jsonl"))
        .arg("--seeds")
        .arg(fixture("three_day_seeds.txt"))
        .args(["--start", "2019-01-28", "--end", "2019-01-30"])
        .arg("--out-dir")
        .arg(dir.path()));
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));

    let csv = fs::read_to_string(dir.path().join("counts.csv")).unwrap();
    let expected = "\
triple_id,day,append,extend,mutate
1,1,0,0,0
1,2,1,1,0
1,3,1,2,0
2,1,0,0,0
2,2,0,0,0
2,3,1,1,1
3,1,0,0,0
3,2,0,1,0
3,3,0,0,0
";
    assert_eq!(csv, expected);
}

#[test]
fn env_var_supplies_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(newsflow()
        .env("NEWSFLOW_CONFIG", fixture("newsflow.conf"))
        .arg("stats")
        .arg("--corpus")
        .arg(fixture("toy_corpus.jsonl"))
        .arg("--out-dir")
        .arg(dir.path()));
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    // window 2019-01-28..2019-02-02 comes from the config file (6 days)
    assert!(stdout(&out).contains("days=6"));
    assert!(stdout(&out).contains("word_counts=14,14,9,12,9,0"));
}

#[test]
fn flag_overrides_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(newsflow()
        .env("NEWSFLOW_CONFIG", fixture("newsflow.conf"))
        .arg("stats")
        .arg("--corpus")
        .arg(fixture("toy_corpus.jsonl"))
        .args(["--end", "2019-02-01"])
        .arg("--out-dir")
        .arg(dir.path()));
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("days=5"));
}

#[test]
fn missing_config_file_is_a_usage_error() {
    let out = run(newsflow()
        .args(["--config", "/no/such/file.conf", "stats"])
        .arg("--corpus")
        .arg(fixture("toy_corpus.jsonl")));
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn dedup_merges_the_embedding_pair() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(newsflow()
        .arg("dedup")
        .arg("--corpus")
        .arg(fixture("toy_corpus.jsonl"))
        .arg("--embeddings")
        .arg(fixture("embeddings_toy.txt"))
        .args(["--start", "2019-01-28", "--end", "2019-02-01"])
        .arg("--out-dir")
        .arg(dir.path()));
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));

    let map = fs::read_to_string(dir.path().join("canonical_map.csv")).unwrap();
    assert!(
        map.contains("empire actor,jussie smollett"),
        "embedding-similar alias should merge onto the frequent name:\n{map}"
    );
    // the rewritten corpus no longer mentions the alias
    let rewritten = fs::read_to_string(dir.path().join("corpus_dedup.jsonl")).unwrap();
    assert!(!rewritten.contains("empire actor"));
}

#[test]
fn simulate_is_deterministic_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let args = |name: &str, seed: &str| {
        let out = run(newsflow()
            .args(["simulate", "--mu", "0.5,0.3,0.4", "--A", "diag:0.2"])
            .args(["--beta", "0.5", "--days", "200", "--seed", seed])
            .args(["--out", name])
            .arg("--out-dir")
            .arg(dir.path()));
        assert_eq!(out.status.code(), Some(0));
        fs::read(dir.path().join(name)).unwrap()
    };
    let a = args("a.csv", "7");
    let b = args("b.csv", "7");
    let c = args("c.csv", "8");
    assert_eq!(a, b, "same seed must reproduce the file byte-for-byte");
    assert_ne!(a, c, "different seeds should differ");
}

#[test]
fn manifests_do_not_record_the_output_directory() {
    let dir1 = tempfile::tempdir().unwrap();
    let dir2 = tempfile::tempdir().unwrap();
    for dir in [&dir1, &dir2] {
        let out = run(newsflow()
            .arg("count")
            .arg("--corpus")
            .arg(fixture("three_day_corpus.jsonl"))
            .arg("--seeds")
            .arg(fixture("three_day_seeds.txt"))
            .args(["--start", "2019-01-28", "--end", "2019-01-30"])
            .arg("--out-dir")
            .arg(dir.path()));
        assert_eq!(out.status.code(), Some(0));
    }
    let m1 = fs::read(dir1.path().join("count.manifest")).unwrap();
    let m2 = fs::read(dir2.path().join("count.manifest")).unwrap();
    assert_eq!(m1, m2, "manifest must be independent of --out-dir");
}

#[test]
fn group_filter_restricts_sources() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(newsflow()
        .arg("count")
        .arg("--corpus")
        .arg(fixture("pipeline_corpus.jsonl"))
        .arg("--seeds")
        .arg(fixture("pipeline_seeds.txt"))
        .arg("--groups")
        .arg(fixture("groups.txt"))
        .args(["--group", "major"])
        .args(["--start", "2019-01-28", "--end", "2019-02-02"])
        .arg("--out-dir")
        .arg(dir.path()));
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));

    // an undefined group label is a usage error
    let out = run(newsflow()
        .arg("count")
        .arg("--corpus")
        .arg(fixture("pipeline_corpus.jsonl"))
        .arg("--seeds")
        .arg(fixture("pipeline_seeds.txt"))
        .arg("--groups")
        .arg(fixture("groups.txt"))
        .args(["--group", "tabloids"])
        .args(["--start", "2019-01-28", "--end", "2019-02-02"])
        .arg("--out-dir")
        .arg(dir.path()));
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("tabloids"));
}

#[test]
fn fit_without_excitation_reports_convergence() {
    let dir = tempfile::tempdir().unwrap();
    let sim = run(newsflow()
        .args(["simulate", "--mu", "0.5,0.3,0.4", "--A", "diag:0.0"])
        .args(["--days", "300", "--seed", "21"])
        .arg("--out-dir")
        .arg(dir.path()));
    assert_eq!(sim.status.code(), Some(0));

    let out = run(newsflow()
        .arg("fit")
        .arg("--counts")
        .arg(dir.path().join("sim_counts.csv"))
        .arg("--no-excitation")
        .arg("--out-dir")
        .arg(dir.path()));
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    assert!(stdout(&out).contains("converged=true"));

    // the A block of the params file stays identically zero
    let params = fs::read_to_string(dir.path().join("params.csv")).unwrap();
    let a_rows: Vec<&str> = params.lines().skip(2).collect();
    assert_eq!(a_rows, vec!["0,0,0"; 3]);
}
