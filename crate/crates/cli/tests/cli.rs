use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn torchar(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_torchar")).args(args).output().expect("binary runs")
}

fn ok_json(args: &[&str]) -> Value {
    let out = torchar(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn path(dir: &Path, name: &str) -> String {
    dir.join(name).to_str().unwrap().to_string()
}

#[test]
fn qhull_of_one_fifth() {
    let v = ok_json(&["qhull", "--E", "1/5", "--m", "0"]);
    assert_eq!(v["hull"], serde_json::json!(["0", "1/5", "4/5"]));
}

#[test]
fn measure_of_a_single_character() {
    let v = ok_json(&["measure", "--B", "factorial:3", "--delta", "1/4", "--levels", "1"]);
    assert_eq!(v["measure"], "1/2");
}

#[test]
fn measure_with_sampling_records_the_seed() {
    let args = ["measure", "--B", "factorial:3", "--delta", "1/8", "--samples", "20000", "--seed", "11"];
    let a = torchar(&args);
    let b = torchar(&args);
    assert_eq!(a.stdout, b.stdout);
    let v: Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(v["monte_carlo"]["seed"], 11);
}

#[test]
fn verify_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = path(dir.path(), "p.csv");
    let v = ok_json(&["verify", "--B", "prufer:2:10", "--x", "1/3", "--N", "10", "--csv", &csv]);
    assert!(v["verdict"]["witness-found"].is_array());
    let text = fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("level,phi,value,err\n0,1,1/3,0\n"));
    assert_eq!(text.lines().count(), 11);
}

#[test]
fn characterize_and_recheck() {
    let dir = tempfile::tempdir().unwrap();
    let (b, certs) = (path(dir.path(), "b.json"), path(dir.path(), "certs.json"));
    let v = ok_json(&["characterize", "--prufer", "2", "--levels", "4", "--out", &b, "--certs", &certs]);
    assert_eq!(v["kind"], "dense");
    let set: Value = serde_json::from_str(&fs::read_to_string(&b).unwrap()).unwrap();
    assert_eq!(set["dim"], 1);
    assert_eq!(set["levels"][0], serde_json::json!([2, 4, 6]));
    let check = ok_json(&["verify-cert", "--certs", &certs]);
    assert_eq!(check["verified"], 4);

    // same run, same bytes, with or without threads
    let again = path(dir.path(), "again.json");
    ok_json(&["characterize", "--prufer", "2", "--levels", "4", "--certs", &again, "--sequential"]);
    assert_eq!(fs::read(&certs).unwrap(), fs::read(&again).unwrap());
}

#[test]
fn characterize_from_a_tower_file() {
    let dir = tempfile::tempdir().unwrap();
    let (tower, b) = (path(dir.path(), "tower.json"), path(dir.path(), "b.json"));
    fs::write(&tower, r#"{"stages": [["1/6"], ["1/6", "1/3", "1/2"]]}"#).unwrap();
    let v = ok_json(&["characterize", "--tower", &tower, "--dim", "1", "--levels", "3", "--out", &b]);
    assert_eq!(v["kind"], "finite");
    let out = torchar(&["characterize", "--tower", &tower, "--dim", "2"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn tampered_certificate_names_the_arc() {
    let dir = tempfile::tempdir().unwrap();
    let certs = path(dir.path(), "certs.json");
    ok_json(&["characterize", "--prufer", "2", "--levels", "3", "--certs", &certs]);
    let mut v: Value = serde_json::from_str(&fs::read_to_string(&certs).unwrap()).unwrap();
    v[2]["arcs"][1][2] = serde_json::json!(1);
    fs::write(&certs, v.to_string()).unwrap();
    let out = torchar(&["verify-cert", "--certs", &certs]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("level 2") && err.contains("arc 1"), "{err}");
}

#[test]
fn malformed_json_points_at_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let b = path(dir.path(), "b.json");
    fs::write(&b, r#"{"dim": 1, "levels": [[1, 2], [3, "x"]]}"#).unwrap();
    let out = torchar(&["verify", "--B", &b, "--x", "1/3"]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("levels[1][1]"), "{err}");
}

#[test]
fn budget_exhaustion_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let b = path(dir.path(), "b.json");
    let out = torchar(&["characterize", "--prufer", "3", "--levels", "3", "--max-chars", "1", "--out", &b]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    let partial: Value = serde_json::from_str(&fs::read_to_string(&b).unwrap()).unwrap();
    assert_eq!(partial["partial"], true);
}

#[test]
fn chains() {
    let v = ok_json(&["check-chain", "--chain", "coordinate:4"]);
    assert_eq!(v["holds"], false);
    assert_eq!(v["at"], 0);
    let dir = tempfile::tempdir().unwrap();
    let chain = path(dir.path(), "chain.json");
    fs::write(&chain, r#"{"ambient": {"torus": 1}, "stages": [{"generators": ["0"]}, {"generators": ["1/2"]}, {"generators": ["1/4"]}, {"generators": ["1/8"]}]}"#).unwrap();
    let b = path(dir.path(), "b.json");
    fs::write(&b, r#"{"dim": 1, "levels": [[2], [4], [8], [3]]}"#).unwrap();
    let v = ok_json(&["check-chain", "--chain", &chain, "--B", &b]);
    assert_eq!(v["holds"], true);
    assert_eq!(v["m"], 0);
    assert_eq!(v["partition"]["levels"], serde_json::json!([[3], [2], [4], [8]]));
    let out = torchar(&["refute", "--chain", &chain, "--levels", "2"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn refute_writes_a_witness() {
    let dir = tempfile::tempdir().unwrap();
    let out = path(dir.path(), "w.json");
    let v = ok_json(&["refute", "--chain", "coordinate:4", "--levels", "4", "--out", &out]);
    assert_eq!(v["ys"][0], "(1/2,0,0,0)");
    let written: Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(written, v);
}

#[test]
fn algebra_commands() {
    let v = ok_json(&["snf", "--matrix", "[[2,4],[6,8]]"]);
    assert_eq!(v["diagonal"], serde_json::json!(["2", "4"]));
    let v = ok_json(&["perp", "--gens", "(1/2,0);(0,1/3)"]);
    assert_eq!(v["invariant_factors"], serde_json::json!(["6"]));
    let v = ok_json(&["expand", "--x", "1/7", "--depth", "8"]);
    assert_eq!(v["digits"]["terminating"], true);
}

#[test]
fn bad_subcommand_input_exits_one() {
    assert_eq!(torchar(&["verify", "--B", "prufer:4:3", "--x", "1/3"]).status.code(), Some(1));
    assert_eq!(torchar(&["qhull", "--E", "abc"]).status.code(), Some(1));
}
