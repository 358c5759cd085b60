use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_ising-strip"));
    for (k, _) in std::env::vars() {
        if k.starts_with("ISING_STRIP_") {
            c.env_remove(k);
        }
    }
    c
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is a JSON report")
}

fn without_timestamp(mut v: Value) -> Value {
    v.as_object_mut().unwrap().remove("timestamp");
    v
}

#[test]
fn passing_suite_exits_zero_with_camel_case_json() {
    let out = bin().args(["verify", "tl", "--L", "2", "--b", "+1"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    assert!(v["runId"].is_string() && v["timestamp"].is_string());
    assert_eq!(v["config"]["L"], 2);
    let rec = &v["records"][0];
    assert_eq!(rec["checkName"], "tl_bulk_relations");
    assert_eq!(rec["params"]["b"], 1);
    assert!(rec.get("wallTime").is_none());
}

#[test]
fn usage_errors_exit_two() {
    for args in [
        vec!["verify", "tl", "--x", "0.5"],
        vec!["verify", "nonsense"],
        vec!["verify", "iom", "--orders", "12"],
        vec!["verify", "tl", "--b", "3"],
    ] {
        let out = bin().args(&args).output().unwrap();
        assert_eq!(out.status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn failing_check_exits_one() {
    // the log T expansion at M = 10 falls short of 1e-10
    let out = bin().args(["verify", "free-energy", "--b", "+1"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let v = json(&out);
    assert!(v["records"].as_array().unwrap().iter().any(|r| r["status"] == "FAIL"));
}

#[test]
fn csv_has_fixed_columns() {
    let out = bin().args(["verify", "spectrum", "--L", "1", "--format", "csv"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("checkName,L,b,x,orders,status,residual,tolerance,fittedSign,wallTime,note"));
    assert!(lines.all(|l| l.starts_with(|c: char| c.is_ascii_lowercase())));
}

#[test]
fn precedence_flags_over_env_over_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.conf");
    std::fs::write(&cfg, "# widths\nL = 1\nseed = 5\nb = -1\n").unwrap();
    let out_path = dir.path().join("report.json");
    let out = bin()
        .args(["verify", "spectrum", "--config"])
        .arg(&cfg)
        .args(["--L", "2", "--out"])
        .arg(&out_path)
        .env("ISING_STRIP_SEED", "9")
        .env("ISING_STRIP_L", "3")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&out_path).unwrap()).unwrap();
    assert_eq!(v["config"]["L"], 2);
    assert_eq!(v["seed"], 9);
    assert_eq!(v["config"]["b"], "minus");
}

#[test]
fn reports_are_reproducible() {
    let run = || json(&bin().args(["verify", "inversion", "--L", "2", "--seed", "17"]).output().unwrap());
    assert_eq!(without_timestamp(run()), without_timestamp(run()));
}

#[test]
fn extract_iom_and_timings() {
    let out = bin().args(["extract-iom", "--L", "2", "--b", "-1", "--timings"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let recs = v["records"].as_array().unwrap();
    let charges: Vec<_> = recs.iter().filter(|r| r["checkName"] == "charge").collect();
    assert_eq!(charges.len(), 7);
    assert!(charges[1]["metrics"]["scalarValue"].is_string());
    assert!(recs.iter().all(|r| r["wallTime"].is_number()));
}
