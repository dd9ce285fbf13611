use std::process::Command;

use expfunc::cli::{EXIT_INPUT, EXIT_NUMERICAL, EXIT_OK};

fn expfunc(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_expfunc")).args(args).output().expect("binary runs");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

const KILL: &str = r#"{"model":"pure_kill","q":1}"#;

#[test]
fn density_csv_has_manifest_then_header() {
    let (code, out, _) = expfunc(&["density", "--inline", KILL, "--x", "1,2", "--n", "1"]);
    assert_eq!(code, EXIT_OK);
    let mut lines = out.lines();
    let manifest = lines.next().unwrap().strip_prefix("# manifest ").expect("manifest line");
    let m: serde_json::Value = serde_json::from_str(manifest).unwrap();
    assert_eq!(m["subcommand"], "density");
    assert_eq!(lines.next().unwrap(), "x,n,value,abs_err,status");
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    let v: f64 = row[2].parse().unwrap();
    assert!((v + (-1f64).exp()).abs() < 1e-8, "{v}");
}

#[test]
fn json_output_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("eval.json");
    let p = path.to_str().unwrap();
    let (code, _, _) = expfunc(&["eval", "--inline", KILL, "--z", "2", "--format", "json", "--out", p]);
    assert_eq!(code, EXIT_OK);
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["manifest"]["schema_version"], 1);
}

#[test]
fn exit_codes() {
    assert_eq!(expfunc(&["density", "--inline", "{not json", "--x", "1"]).0, EXIT_INPUT);
    assert_eq!(expfunc(&["density", "--x", "1"]).0, EXIT_INPUT);
    assert_eq!(expfunc(&["frobnicate"]).0, EXIT_INPUT);
    let (code, out, _) = expfunc(&["density", "--inline", KILL, "--x=-1"]);
    assert_eq!(code, EXIT_NUMERICAL);
    assert!(out.contains("DOMAIN"), "{out}");
}

#[test]
fn simulate_is_reproducible_across_workers() {
    let run = |w: &str| expfunc(&["simulate", "--inline", KILL, "--samples", "500", "--seed", "7", "--workers", w]);
    let (a, b) = (run("1"), run("3"));
    assert_eq!(a.0, EXIT_OK);
    // the manifest records the worker count; the draws must agree
    let draws = |s: &str| s.lines().skip(2).map(str::to_owned).collect::<Vec<_>>();
    assert_eq!(draws(&a.1), draws(&b.1));
    assert_eq!(draws(&a.1).len(), 500);
}
