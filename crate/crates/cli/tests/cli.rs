use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bess(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bess")).args(args).output().unwrap()
}

fn scenario(name: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "scenarios", name].iter().collect();
    p.to_str().unwrap().to_string()
}

/// Short baseline variant written into `dir`.
fn short(dir: &Path, extra: &str) -> String {
    let text = std::fs::read_to_string(scenario("baseline.toml"))
        .unwrap()
        .replace("duration_s = 4920.0", "duration_s = 120.0");
    let path = dir.join("short.toml");
    std::fs::write(&path, format!("{text}\n{extra}")).unwrap();
    path.to_str().unwrap().to_string()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

#[test]
fn validate_accepts_the_corpus() {
    let dir: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "scenarios"].iter().collect();
    let mut n = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            let out = bess(&["validate", "--scenario", path.to_str().unwrap()]);
            assert_eq!(code(&out), 0, "{}: {}", path.display(), String::from_utf8_lossy(&out.stderr));
            n += 1;
        }
    }
    assert!(n >= 18, "corpus has {n} files");
}

#[test]
fn validation_errors_exit_2_and_name_the_field() {
    let tmp = tempfile::tempdir().unwrap();
    let path = short(tmp.path(), "[attacks.s2c.drop]\ndrop_rate = 1.5\n");
    let out = bess(&["validate", "--scenario", &path]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("drop_rate"));

    let path = short(tmp.path(), "[bogus]\nx = 1\n");
    assert_eq!(code(&bess(&["run", "--scenario", &path])), 2);

    let path = short(tmp.path(), "");
    let out = bess(&["sweep", "--scenario", &path, "--param", "attacks.s2c.nope", "--values", "1"]);
    assert_eq!(code(&out), 2);

    // Usage errors share the validation code.
    assert_eq!(code(&bess(&["run"])), 2);
}

#[test]
fn run_writes_artifacts_and_honours_seed() {
    let tmp = tempfile::tempdir().unwrap();
    let path = short(tmp.path(), "");
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    for dir in [&a, &b] {
        let out = bess(&["run", "--scenario", &path, "--seed", "9", "--out", dir.to_str().unwrap()]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    }
    let csv = std::fs::read(a.join("telemetry.csv")).unwrap();
    assert_eq!(csv, std::fs::read(b.join("telemetry.csv")).unwrap());
    assert_eq!(csv.iter().filter(|c| **c == b'\n').count(), 1 + 120 * 50);
    let report: Value = serde_json::from_slice(&std::fs::read(a.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["seed"], 9);
    assert_eq!(report["classification"], "stable");
}

#[test]
fn runtime_errors_exit_3() {
    let tmp = tempfile::tempdir().unwrap();
    let path = short(tmp.path(), "");
    let blocker = tmp.path().join("file");
    std::fs::write(&blocker, "").unwrap();
    let out = bess(&["run", "--scenario", &path, "--out", blocker.join("x").to_str().unwrap()]);
    assert_eq!(code(&out), 3);
}

#[test]
fn sweep_prints_one_row_per_value_in_order() {
    let tmp = tempfile::tempdir().unwrap();
    let path = short(tmp.path(), "");
    let out = bess(&[
        "sweep",
        "--scenario",
        &path,
        "--param",
        "attacks.s2c.drop.drop_rate",
        "--values",
        "0.5,0.0,0.8",
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = stdout.lines().collect();
    assert!(lines[0].starts_with("value,classification,abnormal_share"));
    let values: Vec<&str> = lines[1..].iter().map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(values, ["0.5", "0.0", "0.8"]);
    assert_eq!(std::fs::read_to_string(tmp.path().join("sweep.csv")).unwrap(), stdout);
}

#[test]
fn single_value_sweep_matches_run() {
    let tmp = tempfile::tempdir().unwrap();
    let path = short(tmp.path(), "[attacks.s2c.fdi]\noffset = 0.1\n");
    let run = bess(&["run", "--scenario", &path, "--out", tmp.path().join("r").to_str().unwrap()]);
    assert_eq!(code(&run), 0);
    let report: Value =
        serde_json::from_slice(&std::fs::read(tmp.path().join("r/report.json")).unwrap()).unwrap();

    let plain = short(tmp.path(), "");
    let out = bess(&["sweep", "--scenario", &plain, "--param", "attacks.s2c.fdi.offset", "--values", "0.1"]);
    let stdout = String::from_utf8(out.stdout).unwrap();
    let row: Vec<&str> = stdout.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[1], report["classification"].as_str().unwrap());
    assert_eq!(row[2].parse::<f64>().unwrap(), report["abnormal_share"].as_f64().unwrap());
    assert_eq!(row[3].parse::<f64>().unwrap(), report["settled_mean_hz"].as_f64().unwrap());
}

#[test]
fn serve_reports_a_busy_port() {
    let held = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let port = held.local_addr().unwrap().port().to_string();
    let out = bess(&["serve", "--scenario", &scenario("baseline.toml"), "--port", &port]);
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains(&port));
}
