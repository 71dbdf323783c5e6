use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use maxreg_cli::experiment::{read_rows, summary_path, SummaryRow};
use serde_json::Value;

fn maxreg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_maxreg"))
        .args(args)
        .env_remove("WORKERS")
        .output()
        .expect("spawn maxreg")
}

fn ok_json(args: &[&str]) -> Value {
    let out = maxreg(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("JSON on stdout")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn dump(dir: &Path, name: &str, extra: &[&str]) -> PathBuf {
    let path = dir.join(name);
    let mut args = vec!["init-dump", "--out", s(&path)];
    args.extend_from_slice(extra);
    let out = maxreg(&args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    path
}

fn without_wall_time(mut v: Value) -> Value {
    v.as_object_mut().unwrap().remove("wall_time_s");
    v
}

#[test]
fn rank_one_network_has_one_region() {
    let dir = tempfile::tempdir().unwrap();
    let net = dump(dir.path(), "lin.json", &["--n0", "2", "--widths", "3,2", "-k", "1"]);
    let report = ok_json(&["count", s(&net), "--window=-5:5", "--seed", "4"]);
    assert_eq!(report["regions"], 1);
    assert_eq!(report["seed"], 4);
    assert_eq!(report["window"], serde_json::json!([[-5.0, 5.0], [-5.0, 5.0]]));
}

#[test]
fn missing_or_malformed_file_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.json");
    let out = maxreg(&["count", s(&missing)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nope.json"));

    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"arch\": 3}").unwrap();
    let out = maxreg(&["approx", s(&bad), "--grid", "4"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bad.json"));
}

#[test]
fn bad_window_and_rank_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let net = dump(dir.path(), "n.json", &["--n0", "2", "--widths", "3", "-k", "2"]);
    assert_eq!(maxreg(&["count", s(&net), "--window=-1:1,-1:1,-1:1"]).status.code(), Some(2));
    assert_eq!(maxreg(&["count", s(&net), "--window=3:1"]).status.code(), Some(2));
    let out = maxreg(&["init-dump", "--n0", "2", "--widths", "3", "-k", "7"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn count_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let net = dump(dir.path(), "n.json", &["--n0", "2", "--depth", "2", "--total", "8", "-k", "3", "--seed", "5"]);
    let a = ok_json(&["count", s(&net)]);
    let b = ok_json(&["--workers", "2", "count", s(&net)]);
    assert_eq!(without_wall_time(a.clone()), without_wall_time(b));
    assert!(a["regions"].as_u64().unwrap() >= 1);
    assert_eq!(a["db_pieces"], Value::Null);
    assert_eq!(maxreg(&["count-db", s(&net)]).status.code(), Some(2));
    let two = dump(dir.path(), "m2.json", &["--n0", "2", "--widths", "4", "-k", "2", "--out-dim", "2", "--seed", "5"]);
    let db = ok_json(&["count-db", s(&two)]);
    let (regions, pieces) = (db["regions"].as_u64().unwrap(), db["db_pieces"].as_u64().unwrap());
    assert!(pieces <= regions);
}

#[test]
fn regionmap_rows_and_labels() {
    let dir = tempfile::tempdir().unwrap();
    let net = dump(dir.path(), "n.json", &["--n0", "2", "--widths", "4", "-k", "2", "--seed", "1"]);
    let csv = dir.path().join("map.csv");
    let info = ok_json(&["regionmap", s(&net), "--window=-2:2", "--grid", "5", "--out", s(&csv)]);
    let text = std::fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "y1,y2,label");
    assert_eq!(lines.len(), 26);
    assert_eq!(lines[1], "-2,-2,0");
    assert!(lines[2].starts_with("-2,-1,"));
    let labels: std::collections::BTreeSet<&str> = lines[1..].iter().map(|l| l.rsplit(',').next().unwrap()).collect();
    assert_eq!(labels.len() as u64, info["labels"].as_u64().unwrap());
    let approx = ok_json(&["approx", s(&net), "--window=-2:2", "--grid", "5"]);
    assert_eq!(approx["grid_regions"], info["labels"]);
}

#[test]
fn bounds_command() {
    let out = ok_json(&["bounds", "--n0", "2", "--widths", "3", "-k", "3", "--json"]);
    assert_eq!(out["max_regions_shallow"], 19);
    assert_eq!(out["trivial_pattern_bound"], 27);
    let text = maxreg(&["bounds", "--n0", "2", "--widths", "3", "-k", "3"]);
    assert!(text.status.success());
    assert!(String::from_utf8_lossy(&text.stdout).contains("19"));
    let bad = maxreg(&["bounds", "--n0", "2", "--widths", "3", "-k", "2", "-r", "3"]);
    assert_eq!(bad.status.code(), Some(2));
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("exp.json");
    std::fs::write(&path, body).unwrap();
    path
}

const EXP: &str = r#"{"n0s":[2],"shapes":[{"widths":[3]},{"depth":2,"total":6}],"ranks":[2,3],
    "init":{"scheme":"maxout-he"},"window":[[-20,20]],"trials":4,"counters":["exact","grid"],
    "grid_pts":64,"seed":11}"#;

fn rows_without_wall_time(path: &Path) -> Vec<Vec<String>> {
    let mut rd = csv::Reader::from_path(path).unwrap();
    let col = rd.headers().unwrap().iter().position(|h| h == "wall_time_s").unwrap();
    rd.records()
        .map(|r| {
            r.unwrap()
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != col)
                .map(|(_, v)| v.to_string())
                .collect()
        })
        .collect()
}

#[test]
fn experiment_writes_rows_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), EXP);
    let out = dir.path().join("r.csv");
    let summary: Vec<SummaryRow> =
        serde_json::from_value(ok_json(&["experiment", "--config", s(&cfg), "--out", s(&out)])).unwrap();
    let rows = read_rows(&out).unwrap();
    assert_eq!(rows.len(), 16);
    for r in &rows {
        assert!(r.error.is_none());
        assert!(r.grid_regions.unwrap() <= r.regions.unwrap());
        assert!(r.regions.unwrap() as f64 <= (r.rank as f64).powi(r.widths.split('-').map(|w| w.parse::<i32>().unwrap()).sum()));
    }
    let on_disk: Vec<SummaryRow> = csv::Reader::from_path(summary_path(&out))
        .unwrap()
        .deserialize()
        .collect::<Result<_, _>>()
        .unwrap();
    assert_eq!(on_disk, summary);
    for srow in &summary {
        let vals: Vec<f64> = rows
            .iter()
            .filter(|r| r.config == srow.config)
            .map(|r| r.regions.unwrap() as f64)
            .collect();
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (vals.len() - 1) as f64;
        assert!((srow.regions_mean.unwrap() - mean).abs() <= 1e-12 * mean.abs().max(1.0));
        assert!((srow.regions_std.unwrap() - var.sqrt()).abs() <= 1e-12 * mean.abs().max(1.0));
        assert_eq!(srow.trials, 4);
    }
}

#[test]
fn experiment_resumes_without_duplicates() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), EXP);
    let full = dir.path().join("full.csv");
    let part = dir.path().join("part.csv");
    ok_json(&["experiment", "--config", s(&cfg), "--out", s(&full)]);
    let text = std::fs::read_to_string(&full).unwrap();
    let kept: Vec<&str> = text.lines().take(6).collect();
    std::fs::write(&part, kept.join("\n") + "\n").unwrap();
    ok_json(&["experiment", "--config", s(&cfg), "--out", s(&part)]);
    let mut a = rows_without_wall_time(&full);
    let mut b = rows_without_wall_time(&part);
    assert_eq!(b.len(), 16);
    a.sort();
    b.sort();
    assert_eq!(a, b);
    ok_json(&["experiment", "--config", s(&cfg), "--out", s(&part)]);
    assert_eq!(rows_without_wall_time(&part).len(), 16);
}

#[test]
fn experiment_is_independent_of_worker_count() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), EXP);
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    ok_json(&["--workers", "1", "experiment", "--config", s(&cfg), "--out", s(&a)]);
    ok_json(&["--workers", "3", "experiment", "--config", s(&cfg), "--out", s(&b)]);
    assert_eq!(rows_without_wall_time(&a), rows_without_wall_time(&b));
}

#[test]
fn experiment_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"n0s":[2],"shapes":[{"widths":[3]}],"ranks":[2],"init":{"scheme":"maxout-he"},"window":[[-1,1]],"counters":["db"]}"#);
    assert_eq!(maxreg(&["experiment", "--config", s(&cfg)]).status.code(), Some(2));
    let cfg = write_config(dir.path(), r#"{"n0s":[2],"shapes":[],"bogus":1}"#);
    assert_eq!(maxreg(&["experiment", "--config", s(&cfg)]).status.code(), Some(2));
}

#[test]
fn init_dump_round_trips_and_honours_spec_file() {
    let dir = tempfile::tempdir().unwrap();
    let a = dump(dir.path(), "a.json", &["--n0", "3", "--widths", "4,2", "-k", "3", "--out-dim", "2", "--seed", "8"]);
    let b = dump(dir.path(), "b.json", &["--n0", "3", "--widths", "4,2", "-k", "3", "--out-dim", "2", "--seed", "8"]);
    let net = maxreg_cli::load_network(&a).unwrap();
    assert_eq!(net.arch().widths, vec![4, 2]);
    assert_eq!(net.arch().out_dim, 2);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());

    let spec = dir.path().join("spec.json");
    std::fs::write(&spec, r#"{"scheme":"maxout-he","zero_bias":true,"seed":3}"#).unwrap();
    let z = dump(dir.path(), "z.json", &["--n0", "2", "--widths", "3", "-k", "2", "--config", s(&spec)]);
    let net = maxreg_cli::load_network(&z).unwrap();
    assert!(net.params().hidden.iter().flatten().flatten().all(|f| f.b == 0.0));
    assert!(net.params().output.b.iter().all(|&b| b == 0.0));

    std::fs::write(&spec, r#"{"scheme":"maxout-he","typo":1}"#).unwrap();
    let out = maxreg(&["init-dump", "--n0", "2", "--widths", "3", "-k", "2", "--config", s(&spec)]);
    assert_eq!(out.status.code(), Some(2));
}
