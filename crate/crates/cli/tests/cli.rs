//! End-to-end runs of the `storeplan` binary.

use std::fs;
use std::path::{Path, PathBuf};

use assert_cmd::Command;
use predicates::prelude::*;
use tempfile::TempDir;

fn data(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data").join(rel)
}

fn storeplan() -> Command {
    Command::cargo_bin("storeplan").unwrap()
}

fn instance_args(cmd: &mut Command, dir: &str) {
    cmd.arg("--network")
        .arg(data(&format!("{dir}/network.toml")))
        .arg("--days")
        .arg(data(&format!("{dir}/days.toml")))
        .arg("--tech")
        .arg(data(&format!("{dir}/tech.toml")));
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn plan_on_m2_builds_storage() {
    let out = TempDir::new().unwrap();
    let mut cmd = storeplan();
    cmd.arg("plan");
    instance_args(&mut cmd, "m2");
    cmd.arg("--out-dir").arg(out.path()).assert().success().stdout(predicate::str::contains("plan: bus 1"));
    let report = json(&out.path().join("report.json"));
    assert_eq!(report["schema_version"], 1);
    assert_eq!(report["status"], "converged");
    assert!(report["plan"]["ratings"]["1"]["power"].as_f64().unwrap() > 0.0);
    for f in ["timings.json", "trace.csv", "cuts.csv", "budgets.csv"] {
        assert!(out.path().join(f).exists(), "{f}");
    }
}

#[test]
fn repeated_plans_give_identical_reports() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    for out in [&a, &b] {
        let mut cmd = storeplan();
        cmd.arg("plan");
        instance_args(&mut cmd, "m2-ladder");
        cmd.args(["--chi", "1.2", "--seed", "7", "--out-dir"]).arg(out.path()).assert().success();
    }
    for f in ["report.json", "trace.csv", "cuts.csv", "budgets.csv"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f}");
    }
}

#[test]
fn bad_epsilon_exits_one() {
    let out = TempDir::new().unwrap();
    let mut cmd = storeplan();
    cmd.arg("plan");
    instance_args(&mut cmd, "m2");
    cmd.args(["--epsilon", "1.5", "--out-dir"])
        .arg(out.path())
        .assert()
        .code(1)
        .stderr(predicate::str::contains("epsilon must be in (0,1)"));
}

#[test]
fn iteration_limit_exits_two() {
    let out = TempDir::new().unwrap();
    let cfg = out.path().join("planner.toml");
    fs::write(&cfg, "max_iter = 1\n").unwrap();
    let mut cmd = storeplan();
    cmd.arg("plan");
    instance_args(&mut cmd, "m2");
    cmd.arg("--config").arg(&cfg).arg("--out-dir").arg(out.path()).assert().code(2);
    assert_eq!(json(&out.path().join("report.json"))["status"], "iteration_limit");
}

#[test]
fn unknown_config_field_names_file_and_field() {
    let out = TempDir::new().unwrap();
    let cfg = out.path().join("planner.toml");
    fs::write(&cfg, "epsilom = 0.1\n").unwrap();
    let mut cmd = storeplan();
    cmd.arg("plan");
    instance_args(&mut cmd, "m2");
    cmd.arg("--config")
        .arg(&cfg)
        .arg("--out-dir")
        .arg(out.path())
        .assert()
        .code(1)
        .stderr(predicate::str::contains("planner.toml").and(predicate::str::contains("epsilom")));
}

#[test]
fn bad_network_field_names_file() {
    let out = TempDir::new().unwrap();
    let net = out.path().join("net.toml");
    fs::write(&net, "buses = [\"1\"]\ncandidate_buses = [\"1\"]\n[[lines]]\nid = \"L1\"\nfrom = 1\nto = 1\n").unwrap();
    storeplan()
        .arg("dispatch")
        .arg("--network")
        .arg(&net)
        .arg("--days")
        .arg(data("m2/days.toml"))
        .arg("--out-dir")
        .arg(out.path())
        .assert()
        .code(1)
        .stderr(predicate::str::contains("net.toml").and(predicate::str::contains("reactance")));
}

#[test]
fn infeasible_instance_exits_three() {
    let out = TempDir::new().unwrap();
    let days = out.path().join("days.toml");
    let text = fs::read_to_string(data("m2/days.toml")).unwrap().replace("[50.0, 80.0]", "[50.0, 500.0]");
    fs::write(&days, text).unwrap();
    storeplan()
        .arg("plan")
        .arg("--network")
        .arg(data("m2/network.toml"))
        .arg("--days")
        .arg(&days)
        .arg("--tech")
        .arg(data("m2/tech.toml"))
        .arg("--out-dir")
        .arg(out.path())
        .assert()
        .code(3)
        .stderr(predicate::str::contains("infeasible from hour 2"));
}

#[test]
fn oracle_agrees_on_m2() {
    let out = TempDir::new().unwrap();
    let mut cmd = storeplan();
    cmd.arg("oracle");
    instance_args(&mut cmd, "m2");
    cmd.arg("--out-dir").arg(out.path()).assert().success().stdout(predicate::str::contains("pass"));
    let r = json(&out.path().join("oracle.json"));
    assert!((r["oracle_cost"].as_f64().unwrap() - 1720.0).abs() < 1e-9);
    assert_eq!(r["comparison"]["pass"], true);
}

#[test]
fn bench_on_five_buses() {
    let out = TempDir::new().unwrap();
    storeplan()
        .args(["bench", "--buses", "5", "--seed", "3", "--out-dir"])
        .arg(out.path())
        .assert()
        .success();
    let mut rdr = csv_rows(&out.path().join("bench.csv"));
    let header = rdr.remove(0);
    let days = header.iter().position(|h| h == "days").unwrap();
    let ratio = header.iter().position(|h| h == "saving_ratio").unwrap();
    let counts: Vec<&str> = rdr.iter().map(|r| r[days].as_str()).collect();
    assert_eq!(counts, ["1", "3", "5", "10"]);
    for r in &rdr {
        assert!(r[ratio].parse::<f64>().unwrap() >= 0.95, "{r:?}");
    }
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn cluster_writes_weighted_days() {
    let out = TempDir::new().unwrap();
    storeplan()
        .arg("cluster")
        .arg("--profiles")
        .arg(data("profiles/two_bus_30days.csv"))
        .args(["--clusters", "4", "--out-dir"])
        .arg(out.path())
        .assert()
        .success();
    let text = fs::read_to_string(out.path().join("days.toml")).unwrap();
    let v: toml::Value = toml::from_str(&text).unwrap();
    let days = v["days"].as_array().unwrap();
    assert_eq!(days.len(), 4);
    let total: f64 = days.iter().map(|d| d["weight"].as_float().unwrap()).sum();
    assert_eq!(total, 30.0);

    storeplan()
        .arg("cluster")
        .arg("--profiles")
        .arg(data("profiles/two_bus_30days.csv"))
        .args(["--clusters", "31", "--out-dir"])
        .arg(out.path())
        .assert()
        .code(1);
}

#[test]
fn evaluate_and_dispatch_the_counterexample() {
    let out = TempDir::new().unwrap();
    let mut cmd = storeplan();
    cmd.arg("evaluate");
    instance_args(&mut cmd, "negative-lmp");
    cmd.arg("--plan").arg(data("negative-lmp/plan.toml")).arg("--out-dir").arg(out.path()).assert().success();
    assert_eq!(json(&out.path().join("report.json"))["status"], "evaluated");
    assert!(out.path().join("dispatch.csv").exists());

    let mut cmd = storeplan();
    cmd.arg("dispatch");
    instance_args(&mut cmd, "m2");
    cmd.arg("--out-dir")
        .arg(out.path())
        .assert()
        .success()
        .stdout(predicate::str::contains("operating cost 2100.0000"));
    let prices = fs::read_to_string(out.path().join("prices.csv")).unwrap();
    assert!(prices.lines().count() >= 3);
}

#[test]
fn plan_clusters_a_profile_table() {
    let out = TempDir::new().unwrap();
    storeplan()
        .arg("plan")
        .arg("--network")
        .arg(data("profiles/two_bus_network.toml"))
        .arg("--days")
        .arg(data("profiles/two_bus_30days.csv"))
        .args(["--clusters", "4", "--tech"])
        .arg(data("profiles/tech.toml"))
        .arg("--out-dir")
        .arg(out.path())
        .assert()
        .success()
        .stdout(predicate::str::contains("plan: bus 2"));
    let report = json(&out.path().join("report.json"));
    let weights: f64 = report["operating_costs"]
        .as_array()
        .unwrap()
        .iter()
        .map(|d| d["weight"].as_f64().unwrap())
        .sum();
    assert_eq!(weights, 30.0);
}
