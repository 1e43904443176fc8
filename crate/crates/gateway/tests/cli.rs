use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::{json, Value};

fn pairank(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pairank")).args(args).env_remove("PAIRANK_VLM_ENDPOINT").output().unwrap()
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn error_json(o: &Output) -> Value {
    assert!(!o.status.success());
    let stderr = String::from_utf8_lossy(&o.stderr);
    let line = stderr.lines().last().expect("an error line on stderr");
    serde_json::from_str(line).unwrap_or_else(|e| panic!("not json ({e}): {stderr}"))
}

#[test]
fn sim_is_deterministic_and_writes_each_run() {
    let args = ["sim", "--n", "12", "--runs", "3", "--seed", "5", "--annotator", "oracle"];
    let a = stdout(&pairank(&args));
    assert_eq!(a, stdout(&pairank(&args)));
    let mut lines = a.lines();
    assert_eq!(lines.next(), Some("run,seed,step,tau"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    let runs: std::collections::BTreeSet<_> = rows.iter().map(|r| r[0]).collect();
    assert_eq!(runs.len(), 3);
    assert!(rows.iter().any(|r| r[1] == "7"));
    let last = rows.iter().rev().find(|r| r[0] == "0").unwrap();
    assert_eq!(last[2], "36");
}

#[test]
fn sim_writes_to_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("curves.csv");
    stdout(&pairank(&["sim", "--n", "8", "--runs", "1", "--out", out.to_str().unwrap()]));
    assert!(fs::read_to_string(out).unwrap().starts_with("run,seed,step,tau"));
}

#[test]
fn ablate_emits_one_row_per_arm() {
    let csv = stdout(&pairank(&["ablate", "--hypothesis", "h3", "--runs", "2", "--n", "16"]));
    let lines: Vec<_> = csv.lines().collect();
    assert_eq!(lines.len(), 5);
    assert!(lines[1].starts_with("h3,glicko_adaptive,"));

    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("h3.json");
    stdout(&pairank(&["ablate", "--hypothesis", "h3", "--runs", "2", "--n", "16", "--out", out.to_str().unwrap()]));
    let table: Value = serde_json::from_str(&fs::read_to_string(out).unwrap()).unwrap();
    assert_eq!(table["arms"].as_array().unwrap().len(), 4);
    assert_eq!(table["runs"], 2);
}

#[test]
fn corrupt_sweep_emits_one_row_per_fraction() {
    let json = stdout(&pairank(&[
        "corrupt-sweep", "--p-list", "0,0.5,1", "--runs", "2", "--n", "20", "--format", "json",
    ]));
    let rows: Value = serde_json::from_str(&json).unwrap();
    let rows = rows.as_array().unwrap();
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[2]["fraction"], 1.0);
}

#[test]
fn config_file_fills_unset_flags() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("pairank.toml");
    fs::write(&config, "[sim]\nn = 10\nruns = 2\nseed = 40\n\n[ranking]\nbudget = 7\n").unwrap();
    let csv = stdout(&pairank(&["sim", "--config", config.to_str().unwrap(), "--runs", "1"]));
    let rows: Vec<Vec<&str>> = csv.lines().skip(1).map(|l| l.split(',').collect()).collect();
    assert!(rows.iter().all(|r| r[0] == "0" && r[1] == "40"));
    assert_eq!(rows.last().unwrap()[2], "7");

    fs::write(&config, "[sim]\nbogus = 1\n").unwrap();
    let err = error_json(&pairank(&["sim", "--config", config.to_str().unwrap()]));
    assert_eq!(err["error"]["code"], "config");
}

#[test]
fn errors_are_single_line_json() {
    let o = pairank(&["sim", "--no-such-flag"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(String::from_utf8_lossy(&o.stderr).trim().lines().count(), 1);
    assert_eq!(error_json(&o)["error"]["code"], "usage");

    let o = pairank(&["prior", "mock", "--latents", "/definitely/missing.json"]);
    assert_eq!(error_json(&o)["error"]["code"], "io");

    let o = pairank(&["ablate", "--hypothesis", "h9"]);
    assert!(error_json(&o)["error"]["message"].as_str().unwrap().contains("h9"));
}

#[test]
fn prior_mock_is_seeded() {
    let dir = tempfile::tempdir().unwrap();
    let latents = dir.path().join("latents.json");
    fs::write(&latents, json!({ "a": 1.5, "b": -0.3, "c": 0.0 }).to_string()).unwrap();
    let args = ["prior", "mock", "--latents", latents.to_str().unwrap(), "--noise", "0.5", "--seed", "3"];
    let out = stdout(&pairank(&args));
    assert_eq!(out, stdout(&pairank(&args)));
    let priors: Value = serde_json::from_str(&out).unwrap();
    for id in ["a", "b", "c"] {
        let score = priors[id]["score"].as_f64().unwrap();
        assert!((0.0..=1.0).contains(&score), "{priors}");
    }
}

fn write_exports(dir: &Path, offsets: &[f64]) {
    fs::create_dir_all(dir).unwrap();
    for (k, off) in offsets.iter().enumerate() {
        let rows: Vec<Value> = (0..8)
            .map(|i| {
                let jitter = if (i + k) % 3 == 0 { *off } else { 0.0 };
                json!({ "id": format!("item{i}"), "rating": 1500.0 + 40.0 * i as f64 + jitter })
            })
            .collect();
        fs::write(dir.join(format!("s{k}.json")), Value::Array(rows).to_string()).unwrap();
    }
}

#[test]
fn stats_compare_pairs_sessions_by_name() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    write_exports(&a, &[0.0, 10.0, -10.0, 5.0]);
    write_exports(&b, &[0.0, 90.0, -90.0, 100.0]);
    let out = stdout(&pairank(&[
        "stats", "compare", "--a", a.to_str().unwrap(), "--b", b.to_str().unwrap(), "--resamples", "500",
    ]));
    let report: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(report["pairs"], 6);
    assert_eq!(report["a"]["mean"], 1.0);
    assert!(report["b"]["mean"].as_f64().unwrap() < 1.0);

    fs::remove_file(b.join("s3.json")).unwrap();
    let err = error_json(&pairank(&["stats", "compare", "--a", a.to_str().unwrap(), "--b", b.to_str().unwrap()]));
    assert_eq!(err["error"]["code"], "usage");
}

#[test]
fn prior_compute_reports_unreachable_endpoint() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("x.png"), b"fake").unwrap();
    let o = pairank(&[
        "prior", "compute", "--images", dir.path().to_str().unwrap(), "--endpoint", "http://127.0.0.1:9/api/generate",
        "--timeout-secs", "2",
    ]);
    assert_eq!(error_json(&o)["error"]["code"], "prior");
}
