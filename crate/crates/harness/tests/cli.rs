use std::fs;
use std::process::{Command, Output};

use serde_json::Value;

fn olz(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_olz")).args(args).output().expect("olz runs")
}

fn json_out(o: &Output) -> Value {
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_slice(&o.stdout).unwrap()
}

#[test]
fn rearrange_sorts_slabs() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("f.json");
    fs::write(&p, r#"{"breakpoints": [0, 1, 3, 4], "values": [1, 3, 2]}"#).unwrap();
    let v = json_out(&olz(&["rearrange", p.to_str().unwrap()]));
    assert_eq!(v["star"]["values"], serde_json::json!([3.0, 2.0, 1.0]));
    assert_eq!(v["star"]["breakpoints"], serde_json::json!([0.0, 2.0, 3.0, 4.0]));
}

#[test]
fn norm_of_indicator() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("n.json");
    fs::write(
        &p,
        r#"{"f": {"breakpoints": [0, 4], "values": [1]}, "norm": {"phi": {"kind": "power", "p": 2}}}"#,
    )
    .unwrap();
    let v = json_out(&olz(&["norm", p.to_str().unwrap()]));
    assert!((v["norm"].as_f64().unwrap() - 2.0).abs() < 1e-9);
}

#[test]
fn generate_is_seeded() {
    let a = olz(&["generate", "decreasing_step", "--seed", "9", "--slabs", "5"]);
    let b = olz(&["generate", "decreasing_step", "--seed", "9", "--slabs", "5"]);
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(json_out(&a)["kind"], "step");
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, "{\"scenarios\": [\n  {\"suite\": \"nope\"}]}").unwrap();
    let o = olz(&["run", bad.to_str().unwrap(), "--out", dir.path().join("r1").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));

    let wrong = dir.path().join("wrong.json");
    fs::write(
        &wrong,
        r#"{"scenarios": [{"name": "sq", "suite": "growth", "inputs": {"kernel": {"kind": "squared_difference"}, "points": 50}}]}"#,
    )
    .unwrap();
    let out = dir.path().join("r2");
    let o = olz(&["run", wrong.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let summary: Value = serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["scenarios"][0]["observed"], "violated_witness");
    assert!(out.join("sq.csv").exists());
}

#[test]
fn verify_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let o = olz(&["verify", "oneil2", "--trials", "3", "--grid", "4", "--out", dir.path().to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(dir.path().join("oneil2.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("scenario,trial,probe,lhs,rhs,slack,verdict"));
    assert_eq!(csv.lines().count(), 1 + 3 * 4);
    assert_eq!(olz(&["verify", "nope"]).status.code(), Some(2));
}
