//! Black-box tests of the `nba` binary: exit codes, output shapes, and the
//! prove/verify round trip.

use assert_cmd::Command;
use predicates::prelude::*;

fn nba() -> Command {
    Command::cargo_bin("nba").unwrap()
}

fn config(name: &str) -> String {
    format!("{}/../../configs/{name}.nba", env!("CARGO_MANIFEST_DIR"))
}

#[test]
fn prove_quiet_reports_outcome_and_terms() {
    nba()
        .args(["prove", "--quiet"])
        .arg(config("miquel4"))
        .assert()
        .success()
        .stdout(predicate::str::contains("outcome: proved"))
        .stdout(predicate::str::contains("max terms: 1"));
}

#[test]
fn prove_prints_trace_and_elapsed_time() {
    nba()
        .arg("prove")
        .arg(config("three-circles"))
        .assert()
        .success()
        .stdout(predicate::str::contains("outcome: proved"))
        .stdout(predicate::str::contains("residual: [e 1 2 3]"))
        .stderr(predicate::str::contains("elapsed:"));
}

#[test]
fn unresolved_reduction_exits_one() {
    nba()
        .args(["prove", "--quiet"])
        .arg(config("secants"))
        .assert()
        .code(1)
        .stdout(predicate::str::contains("outcome: reduced"));
}

#[test]
fn random_seed_is_accepted() {
    nba()
        .args(["prove", "--quiet", "--seed", "random"])
        .arg(config("miquel4"))
        .assert()
        .success();
}

#[test]
fn bad_seed_is_a_usage_error() {
    nba()
        .args(["prove", "--seed", "sometimes"])
        .arg(config("miquel4"))
        .assert()
        .code(3)
        .stderr(predicate::str::contains("invalid seed"));
}

#[test]
fn parse_error_carries_location_and_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("broken.nba");
    std::fs::write(&bad, "free 1 2 3\npoint 4 = circlemeet 1 (2 3)\n").unwrap();
    nba()
        .arg("prove")
        .arg(&bad)
        .assert()
        .code(3)
        .stderr(predicate::str::contains("broken.nba:2:"));
}

#[test]
fn missing_file_exits_three() {
    nba()
        .arg("prove")
        .arg("no-such-file.nba")
        .assert()
        .code(3)
        .stderr(predicate::str::contains("no-such-file.nba"));
}

#[test]
fn table_reports_counts_and_limitation_note() {
    let assert = nba()
        .arg("table")
        .args(["three-circles", "miquel4"].map(config))
        .assert()
        .success()
        .stdout(predicate::str::contains("example"))
        .stdout(predicate::str::contains("not bundled"));
    let stdout = String::from_utf8_lossy(&assert.get_output().stdout).to_string();
    for name in ["three-circles", "miquel4"] {
        let row = stdout.lines().find(|l| l.starts_with(name)).unwrap();
        let cols: Vec<&str> = row.split_whitespace().collect();
        assert_eq!(&cols[1..4], &["1", "1", "proved"], "{row}");
    }
}

#[test]
fn prove_verify_round_trip_and_tampering() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("m4.json");
    nba()
        .args(["prove", "--quiet", "--trace"])
        .arg(&trace)
        .arg(config("miquel4"))
        .assert()
        .success();

    nba()
        .arg("verify")
        .arg(&trace)
        .arg(config("miquel4"))
        .args(["--samples", "4"])
        .assert()
        .success()
        .stdout(predicate::str::contains("verified: "));

    // Corrupting a residual coefficient must be caught (exit code 2).
    let mut json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&trace).unwrap()).unwrap();
    json["residual"][0][1] = serde_json::Value::String("7/3".into());
    let tampered = dir.path().join("tampered.json");
    std::fs::write(&tampered, serde_json::to_string(&json).unwrap()).unwrap();
    nba()
        .arg("verify")
        .arg(&tampered)
        .arg(config("miquel4"))
        .args(["--samples", "2"])
        .assert()
        .code(2);

    // Verifying against the wrong configuration must also fail.
    nba()
        .arg("verify")
        .arg(&trace)
        .arg(config("secants"))
        .args(["--samples", "2"])
        .assert()
        .code(2);
}

#[test]
fn verify_requires_at_least_one_sample() {
    nba()
        .arg("verify")
        .arg("whatever.json")
        .arg(config("miquel4"))
        .args(["--samples", "0"])
        .assert()
        .failure()
        .stderr(predicate::str::contains("--samples"));
}
