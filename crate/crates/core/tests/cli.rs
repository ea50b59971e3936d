mod common;

use std::path::Path;
use std::process::Command;

use serde_json::Value;

use twinlog::cli::{run_with, EXIT_INFEASIBLE, EXIT_INPUT, EXIT_OK};
use twinlog::scenario::SHOWCASE_JSON;
use twinlog::twin::{fold, load_frames, RunStatus};

fn cli(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let mut argv = vec!["twinlog"];
    argv.extend_from_slice(args);
    let code = run_with(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn write(dir: &Path, name: &str, content: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, content).unwrap();
    p.to_str().unwrap().to_owned()
}

fn overfull_scenario() -> String {
    let mut sc: Value = serde_json::from_str(SHOWCASE_JSON).unwrap();
    // every D1 order exceeds what T1 alone can carry
    for c in sc["customers"].as_array_mut().unwrap() {
        if c["carrier"] == "D1" {
            c["demand"] = 3.into();
        }
    }
    sc.to_string()
}

#[test]
fn showcase_run_prints_the_table() {
    let tmp = tempfile::tempdir().unwrap();
    let runs = tmp.path().to_str().unwrap();
    let (code, out, err) = cli(&["run", "--seed", "7", "--runs-dir", runs]);
    assert_eq!(code, EXIT_OK, "{err}");
    let header: Vec<&str> = out.lines().find(|l| l.starts_with("Truck")).unwrap().split('|').map(str::trim).collect();
    assert_eq!(header, ["Truck", "Route before collaboration", "Route after collaboration", "Distance reduction"]);
    assert!(out.contains("Total: from 32 to 24 blocks, reduction 8 blocks (25.0%)"), "{out}");
    assert!(out.contains("successfully delivered products to"));
    let milestones = out.lines().filter(|l| l.starts_with("[tick ")).count();
    assert_eq!(milestones, 9);
}

#[test]
fn json_and_table_report_the_same_numbers() {
    let tmp = tempfile::tempdir().unwrap();
    let runs = tmp.path().to_str().unwrap();
    let (code, json, _) = cli(&["run", "--transport", "local", "--format", "json", "--runs-dir", runs]);
    assert_eq!(code, EXIT_OK);
    let v: Value = serde_json::from_str(&json).unwrap();
    let (_, table, _) = cli(&["run", "--transport", "local", "--runs-dir", runs]);
    let rows: Vec<Vec<String>> = table
        .lines()
        .filter(|l| l.starts_with('T') && !l.starts_with("Truck") && l.contains('|'))
        .map(|l| l.split('|').map(|c| c.trim().to_owned()).collect())
        .collect();
    let trucks = v["trucks"].as_array().unwrap();
    assert_eq!(rows.len(), trucks.len());
    for (row, t) in rows.iter().zip(trucks) {
        let want = [
            t["truck"].as_str().unwrap().to_owned(),
            join(&t["before_route"]),
            join(&t["after_route"]),
            format!("from {} to {} blocks", t["before_blocks"], t["after_blocks"]),
        ];
        assert_eq!(row.as_slice(), want.as_slice());
    }
    assert_eq!(v["pre_total"], 32);
    assert_eq!(v["post_total"], 24);
}

fn join(route: &Value) -> String {
    route
        .as_array()
        .unwrap()
        .iter()
        .map(|n| n.to_string())
        .collect::<Vec<_>>()
        .join("→")
}

#[test]
fn reruns_write_byte_identical_logs() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    for dir in [&a, &b] {
        let (code, _, err) = cli(&["run", "--seed", "1", "--runs-dir", dir.to_str().unwrap()]);
        assert_eq!(code, EXIT_OK, "{err}");
    }
    let id = std::fs::read_dir(&a).unwrap().next().unwrap().unwrap().file_name();
    for f in ["frames.ndjson", "messages.ndjson", "events.ndjson", "record.json", "scenario.json"] {
        let x = std::fs::read(a.join(&id).join(f)).unwrap();
        let y = std::fs::read(b.join(&id).join(f)).unwrap();
        assert!(x == y, "{f} differs between reruns");
    }
}

#[test]
fn replay_folds_logs_back() {
    let tmp = tempfile::tempdir().unwrap();
    let runs = tmp.path().join("runs");
    cli(&["run", "--transport", "local", "--runs-dir", runs.to_str().unwrap()]);
    let run_dir = std::fs::read_dir(&runs).unwrap().next().unwrap().unwrap().path();
    let (code, out, _) = cli(&["replay", run_dir.to_str().unwrap(), "--format", "json"]);
    assert_eq!(code, EXIT_OK);
    let snap: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(snap["status"], "Completed");
    assert_eq!(snap["report"]["post_total"], 24);

    // empty log: the initial snapshot
    let empty = write(tmp.path(), "empty.ndjson", "");
    let (code, out, _) = cli(&["replay", &empty, "--format", "json"]);
    assert_eq!(code, EXIT_OK);
    let snap: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(snap["status"], "Configured");
    assert_eq!(snap["last_seq"], 0);

    // truncated log: the snapshot at that prefix
    let full = std::fs::read_to_string(run_dir.join("frames.ndjson")).unwrap();
    let head: String = full.lines().take(30).map(|l| format!("{l}\n")).collect();
    let cut = write(tmp.path(), "cut.ndjson", &head);
    let frames = load_frames(Path::new(&cut)).unwrap();
    let expect = fold(&frames);
    assert_eq!(expect.status, RunStatus::Running);
    let (_, out, _) = cli(&["replay", &cut, "--format", "json"]);
    assert_eq!(serde_json::from_str::<Value>(&out).unwrap(), serde_json::to_value(&expect).unwrap());

    // corrupt line is reported with its position
    let bad = write(tmp.path(), "bad.ndjson", &format!("{head}not json\n"));
    let (code, _, err) = cli(&["replay", &bad]);
    assert_eq!(code, EXIT_INPUT);
    assert!(err.contains("31"), "{err}");
}

#[test]
fn solve_strategies_agree_with_the_oracle() {
    let tmp = tempfile::tempdir().unwrap();
    // six customers, two carriers: small enough to brute force
    let sc = r#"{
      "depots": [
        {"label": "D1", "marker": 0, "trucks": [{"alias": "T1", "capacity": 6}]},
        {"label": "D2", "marker": 24, "trucks": [{"alias": "T2", "capacity": 6}]}
      ],
      "customers": [
        {"label": "C1", "marker": 3, "demand": 1, "carrier": "D1"},
        {"label": "C2", "marker": 22, "demand": 1, "carrier": "D1"},
        {"label": "C3", "marker": 12, "demand": 1, "carrier": "D1"},
        {"label": "C4", "marker": 5, "demand": 1, "carrier": "D2"},
        {"label": "C5", "marker": 19, "demand": 1, "carrier": "D2"},
        {"label": "C6", "marker": 7, "demand": 1, "carrier": "D2"}
      ]
    }"#;
    let path = write(tmp.path(), "six.json", sc);
    let scenario = twinlog::Scenario::from_json(sc).unwrap();
    let inst = twinlog::solver::Instance::from_scenario(&scenario, twinlog::solver::Mode::Collaborative);
    let oracle = common::brute_force_optimum(&inst).unwrap();

    let (code, out, _) = cli(&["solve", "--scenario", &path, "--exact", "--format", "json"]);
    assert_eq!(code, EXIT_OK);
    let exact: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(exact["post_total"], oracle);
    let (_, out, _) = cli(&["solve", "--scenario", &path, "--heuristic", "--format", "json"]);
    let heur: Value = serde_json::from_str(&out).unwrap();
    assert!(heur["post_total"].as_u64().unwrap() >= u64::from(oracle));

    let (code, out, _) = cli(&["solve"]);
    assert_eq!(code, EXIT_OK);
    assert!(out.contains("from 32 to 24 blocks"));
}

#[test]
fn input_errors_and_infeasibility_have_distinct_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let (code, _, err) = cli(&["run", "--scenario", "/no/such/file.json"]);
    assert_eq!(code, EXIT_INPUT);
    assert!(err.contains("/no/such/file.json"), "{err}");

    let (code, _, _) = cli(&["validate", "--scenario", &write(tmp.path(), "junk.json", "{")]);
    assert_eq!(code, EXIT_INPUT);
    let (code, out, _) = cli(&["validate"]);
    assert_eq!(code, EXIT_OK);
    assert!(out.starts_with("ok: 5x5 grid, 3 depots, 3 trucks, 9 customers"));

    let overfull = write(tmp.path(), "overfull.json", &overfull_scenario());
    let (code, _, _) = cli(&["solve", "--scenario", &overfull]);
    assert_eq!(code, EXIT_INFEASIBLE);
    let runs = tmp.path().join("runs");
    let (code, _, _) = cli(&["run", "--transport", "local", "--scenario", &overfull, "--runs-dir", runs.to_str().unwrap()]);
    assert_eq!(code, EXIT_INFEASIBLE);

    let (code, _, _) = cli(&["run", "--speed", "-1"]);
    assert_eq!(code, EXIT_INPUT);
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_twinlog");
    let out = Command::new(bin).args(["solve", "--scenario", "/missing.json"]).output().unwrap();
    assert_eq!(out.status.code(), Some(EXIT_INPUT));
    let out = Command::new(bin).args(["solve", "--format", "json"]).output().unwrap();
    assert_eq!(out.status.code(), Some(EXIT_OK));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["post_total"], 24);
}
