//! End-to-end tests of the `portsched` binary: golden outputs for every
//! subcommand, the exit-code contract, and the stdout/stderr separation.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const TOY1: &str = "strategy,problem,status,time\nA,p1,SOL,2\nA,p2,SOL,5\nB,p3,SOL,3\n";
const TOY2: &str =
    "strategy,problem,status,time\nA,p1,SOL,2\nB,p2,SOL,6\nB,p3,SOL,6\nB,p4,SOL,6\n";
const META: &str = r#"{"strategies": {
  "A": {"witness": "p1", "options": {"av": "on"}},
  "B": {"witness": "p3", "options": {"av": "off"}}
}}"#;

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_portsched"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("stdout is UTF-8")
}

fn json(out: &Output) -> Value {
    serde_json::from_str(&stdout(out)).expect("stdout is JSON")
}

fn slices(value: &Value) -> Vec<(String, u64)> {
    value["slices"]
        .as_array()
        .unwrap()
        .iter()
        .map(|s| (s["strategy"].as_str().unwrap().to_owned(), s["limit"].as_u64().unwrap()))
        .collect()
}

fn setup(files: &[(&str, &str)]) -> (TempDir, PathBuf) {
    let dir = TempDir::new().unwrap();
    for (name, content) in files {
        fs::write(dir.path().join(name), content).unwrap();
    }
    let path = dir.path().to_path_buf();
    (dir, path)
}

#[test]
fn construct_order_golden() {
    let (_g, dir) = setup(&[("toy1.csv", TOY1)]);
    let out = run(&dir, &["construct", "--matrix", "toy1.csv", "--budget", "10", "--order"]);
    assert!(out.status.success());
    let v = json(&out);
    assert_eq!(slices(&v), vec![("A".into(), 5), ("B".into(), 3)]);
    assert_eq!(v["total"], 8);
}

#[test]
fn luby_golden() {
    let (_g, dir) = setup(&[]);
    let out = run(&dir, &["luby", "--base", "2000", "--cap", "256000", "--count", "7"]);
    assert!(out.status.success());
    assert_eq!(stdout(&out), "2000\n2000\n4000\n2000\n2000\n4000\n8000\n");
}

#[test]
fn exact_solve_golden() {
    let (_g, dir) = setup(&[("toy1.csv", TOY1)]);
    let out = run(&dir, &["exact", "--matrix", "toy1.csv", "--budget", "8", "--solve"]);
    assert!(out.status.success());
    let v = json(&out);
    assert_eq!(v["objective"], 3);
    assert_eq!(v["schedule"]["A"], 5);
    assert_eq!(v["schedule"]["B"], 3);
}

#[test]
fn exact_lp_export_writes_model_file() {
    let (_g, dir) = setup(&[("toy1.csv", TOY1)]);
    let out = run(
        &dir,
        &["exact", "--matrix", "toy1.csv", "--budget", "8", "--export-lp", "toy1.lp"],
    );
    assert!(out.status.success());
    assert!(stdout(&out).is_empty());
    let lp = fs::read_to_string(dir.join("toy1.lp")).unwrap();
    assert!(lp.lines().any(|l| l == " budget: t_A + t_B <= 8"), "{lp}");
    assert!(lp.lines().any(|l| l == " obj: r_A__p1 + r_A__p2 + r_B__p3"), "{lp}");
}

#[test]
fn min_cover_golden() {
    let (_g, dir) = setup(&[("toy1.csv", TOY1)]);
    let out = run(&dir, &["min-cover", "--matrix", "toy1.csv"]);
    assert!(out.status.success());
    let v = json(&out);
    assert_eq!(v["total"], 8);
    assert_eq!(v["schedule"]["A"], 5);
}

#[test]
fn replay_matches_budgeted_construct() {
    let (_g, dir) = setup(&[("toy1.csv", TOY1)]);
    let unbounded = run(
        &dir,
        &["construct", "--matrix", "toy1.csv", "--unbounded", "--journal", "j.json"],
    );
    assert!(unbounded.status.success());
    let direct =
        run(&dir, &["construct", "--matrix", "toy1.csv", "--budget", "8"]);
    let replayed = run(&dir, &["replay", "--journal", "j.json", "--budget", "8"]);
    assert!(direct.status.success() && replayed.status.success());
    assert_eq!(stdout(&direct), stdout(&replayed));
}

#[test]
fn construct_then_simulate_matches_journal_count() {
    let (_g, dir) = setup(&[("toy1.csv", TOY1)]);
    let build = run(
        &dir,
        &[
            "construct",
            "--matrix",
            "toy1.csv",
            "--budget",
            "10",
            "--journal",
            "j.json",
            "--output",
            "sched.json",
        ],
    );
    assert!(build.status.success());
    assert!(stdout(&build).is_empty(), "--output leaves stdout silent");
    let sim = run(&dir, &["simulate", "--matrix", "toy1.csv", "--schedule", "sched.json"]);
    assert!(sim.status.success());
    let journal: Value =
        serde_json::from_str(&fs::read_to_string(dir.join("j.json")).unwrap()).unwrap();
    let journal_covered: usize = journal["entries"]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| e["newly_covered"].as_array().unwrap().len())
        .sum();
    assert_eq!(json(&sim)["count"].as_u64().unwrap() as usize, journal_covered);
}

#[test]
fn prob_construct_runs_on_deterministic_data() {
    let (_g, dir) = setup(&[("toy1.csv", TOY1)]);
    let out = run(&dir, &["prob-construct", "--matrix", "toy1.csv", "--budget", "8"]);
    assert!(out.status.success());
    let v = json(&out);
    assert_eq!(slices(&v), vec![("A".into(), 3), ("B".into(), 4)]);
}

#[test]
fn curve_sources() {
    let (_g, dir) = setup(&[("toy1.csv", TOY1)]);
    let vbss = run(&dir, &["curve", "--matrix", "toy1.csv", "--vbss"]);
    assert!(vbss.status.success());
    assert_eq!(stdout(&vbss), "time,solved\n2,1\n3,2\n5,3\n");

    run(&dir, &["construct", "--matrix", "toy1.csv", "--unbounded", "--journal", "j.json"]);
    let journal = run(&dir, &["curve", "--matrix", "toy1.csv", "--journal", "j.json"]);
    assert_eq!(stdout(&journal), "time,solved\n2,1\n5,2\n8,3\n");

    let both = run(&dir, &["curve", "--matrix", "toy1.csv", "--vbss", "--journal", "j.json"]);
    assert_eq!(both.status.code(), Some(1), "curve sources are mutually exclusive");
}

#[test]
fn baseline_golden() {
    let (_g, dir) = setup(&[("toy1.csv", TOY1)]);
    let ps = run(
        &dir,
        &[
            "baseline", "--matrix", "toy1.csv", "psetheo", "--dt", "1", "--l", "8",
            "--budget", "8",
        ],
    );
    assert!(ps.status.success());
    assert_eq!(slices(&json(&ps)), vec![("A".into(), 5), ("B".into(), 3)]);

    let bk = run(
        &dir,
        &["baseline", "--matrix", "toy1.csv", "buckets", "--bucket", "3", "--budget", "9"],
    );
    assert_eq!(slices(&json(&bk)), vec![("A".into(), 3), ("B".into(), 3)]);
}

#[test]
fn dist_and_freq_outputs() {
    let (_g, dir) = setup(&[("toy1.csv", TOY1), ("meta.json", META)]);
    let dist = run(
        &dir,
        &["dist", "--matrix", "toy1.csv", "--meta", "meta.json", "--option", "av"],
    );
    assert!(dist.status.success());
    let text = stdout(&dist);
    assert_eq!(
        text.lines().next().unwrap(),
        "value,strategies,unique_absolute,unique_per_strategy,distribution"
    );
    assert!(text.contains("on,1,2,2.00,0.67"), "{text}");

    let freq = run(&dir, &["freq", "--meta", "meta.json", "--option", "av"]);
    let v = json(&freq);
    assert_eq!(v["on"]["count"], 1);
    assert_eq!(v["on"]["frequency"], 0.5);
}

#[test]
fn cv_report_shape() {
    let (_g, dir) = setup(&[("toy2.csv", TOY2), ("meta.json", r#"{"strategies": {"A": {}, "B": {}}}"#)]);
    let out = run(
        &dir,
        &[
            "cv", "--matrix", "toy2.csv", "--meta", "meta.json", "--k", "2", "--rounds",
            "2", "--seed", "3", "--budget", "10", "--include-unwitnessed",
        ],
    );
    assert!(out.status.success());
    let v = json(&out);
    assert_eq!(v["folds"].as_array().unwrap().len(), 4);
    assert_eq!(v["skipped"], 0);
    assert_eq!(v["config"]["constructor"], "greedy");
    assert!(v["train_mean"].as_f64().unwrap() > 0.0);
}

#[test]
fn exit_codes() {
    let (_g, dir) = setup(&[("toy1.csv", TOY1), ("bad.csv", "who,what\n1,2\n")]);

    let usage = run(&dir, &["construct", "--matrix", "toy1.csv", "--bogus"]);
    assert_eq!(usage.status.code(), Some(1));
    assert!(usage.stdout.is_empty());
    assert!(!usage.stderr.is_empty());

    let conflict =
        run(&dir, &["construct", "--matrix", "toy1.csv", "--budget", "5", "--unbounded"]);
    assert_eq!(conflict.status.code(), Some(1));

    let parse = run(&dir, &["construct", "--matrix", "bad.csv", "--budget", "5"]);
    assert_eq!(parse.status.code(), Some(2));
    assert!(parse.stdout.is_empty());
    assert!(!parse.stderr.is_empty());

    let missing = run(&dir, &["construct", "--matrix", "nope.csv", "--budget", "5"]);
    assert_eq!(missing.status.code(), Some(2));

    let help = run(&dir, &["--help"]);
    assert_eq!(help.status.code(), Some(0));
    assert!(!help.stdout.is_empty());
}

#[test]
fn oversized_exact_instance_exits_with_capacity_code() {
    let mut csv = String::from("strategy,problem,status,time\n");
    for s in 0..30 {
        for p in 0..30 {
            csv.push_str(&format!("s{s:02},p{p:02},SOL,{}\n", s * 31 + p + 1));
        }
    }
    let (_g, dir) = setup(&[("big.csv", &csv)]);
    let out = run(&dir, &["exact", "--matrix", "big.csv", "--budget", "100000", "--solve"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(out.stdout.is_empty());
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("too large"), "{err}");
}

#[test]
fn luby_rejects_invalid_cap() {
    let (_g, dir) = setup(&[]);
    let out = run(&dir, &["luby", "--base", "2000", "--cap", "3000"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn output_file_is_written_atomically_in_place() {
    let (_g, dir) = setup(&[("toy1.csv", TOY1)]);
    let out = run(
        &dir,
        &["construct", "--matrix", "toy1.csv", "--budget", "10", "--output", "s.json"],
    );
    assert!(out.status.success());
    let direct = run(&dir, &["construct", "--matrix", "toy1.csv", "--budget", "10"]);
    assert_eq!(fs::read_to_string(dir.join("s.json")).unwrap(), stdout(&direct));
    // no stray temp files left behind
    let leftovers: Vec<_> = fs::read_dir(&dir)
        .unwrap()
        .filter_map(|e| e.ok())
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .filter(|n| n.contains(".tmp-"))
        .collect();
    assert!(leftovers.is_empty(), "{leftovers:?}");
}

#[test]
fn determinism_across_runs() {
    let (_g, dir) = setup(&[("toy2.csv", TOY2), ("meta.json", r#"{"strategies": {"A": {}, "B": {}}}"#)]);
    let args = [
        "cv", "--matrix", "toy2.csv", "--meta", "meta.json", "--k", "2", "--rounds", "1",
        "--seed", "9", "--budget", "12", "--include-unwitnessed", "--constructor", "psetheo",
    ];
    let a = json(&run(&dir, &args));
    let b = json(&run(&dir, &args));
    assert_eq!(a["train_mean"], b["train_mean"]);
    assert_eq!(a["folds"][0]["schedule"], b["folds"][0]["schedule"]);
}
