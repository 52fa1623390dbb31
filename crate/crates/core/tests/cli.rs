//! End-to-end runs of the `elswap` binary.

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn elswap() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_elswap"));
    cmd.env_remove("ELSWAP_WORKERS");
    cmd
}

fn run(args: &[&str]) -> Output {
    elswap().args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf-8 output")
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("run.json");
    std::fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn table3_matches_every_reference_row() {
    let out = run(&["table3"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("lambda,quantity,computed,expected,match"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 9);
    assert!(rows.iter().all(|r| r.ends_with(",true")), "{text}");
}

#[test]
fn check_reports_both_conditions_as_json() {
    let out = run(&["--format", "json", "check"]);
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["model_tag"], "samuelson");
    assert_eq!(v["feller_ok"], true);
    assert_eq!(v["novikov_ok"], true);
}

#[test]
fn missing_heston_section_prices_with_reference_values() {
    let dir = tempfile::tempdir().unwrap();
    let explicit = write_config(
        dir.path(),
        r#"{"heston":{"kappa":3,"theta":0.6,"sigma_vv":0.4,"rho":-0.3,"nu0":0.6,"f0":30,"r":0.01}}"#,
    );
    let with = run(&["--config", &explicit, "price"]);
    let without = run(&["price"]);
    assert_eq!(with.status.code(), Some(0));
    assert_eq!(stdout(&with), stdout(&without));
}

#[test]
fn malformed_config_exits_one_with_json_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(dir.path(), r#"{"model":{"bogus":1}}"#);
    let out = run(&["--config", &path, "check"]);
    assert_eq!(out.status.code(), Some(1));
    let err: Value = serde_json::from_str(String::from_utf8_lossy(&out.stderr).trim()).unwrap();
    assert!(err["error"].is_string());
    assert!(err["message"].is_string());
}

#[test]
fn unknown_top_level_field_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(dir.path(), r#"{"heston":{"kappa":3},"extra":true}"#);
    assert_eq!(run(&["--config", &path, "check"]).status.code(), Some(1));
}

#[test]
fn simulation_is_reproducible_for_a_seed() {
    let args = ["--seed", "11", "--paths", "300", "--steps", "40", "simulate"];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let c = run(&["--seed", "12", "--paths", "300", "--steps", "40", "simulate"]);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn worker_count_does_not_change_results() {
    let base = ["--seed", "5", "--paths", "2000", "--steps", "40", "price", "--method", "mc"];
    let one = elswap().args(["--workers", "1"]).args(base).output().unwrap();
    let four = elswap().args(["--workers", "4"]).args(base).output().unwrap();
    let env = elswap().env("ELSWAP_WORKERS", "3").args(base).output().unwrap();
    assert_eq!(one.status.code(), Some(0));
    assert_eq!(one.stdout, four.stdout);
    assert_eq!(one.stdout, env.stdout);
}

#[test]
fn out_flag_writes_the_report_to_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("factors.csv");
    let out = run(&["--out", target.to_str().unwrap(), "decompose"]);
    assert_eq!(out.status.code(), Some(0));
    let written = std::fs::read_to_string(&target).unwrap();
    assert!(written.starts_with("t,"), "{written}");
    assert!(written.lines().count() > 10);
}

#[test]
fn charfn_dump_has_both_legs() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("psi.csv");
    let out = run(&["price", "--dump-charfn", target.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&target).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("leg,phi,re_psi0,im_psi0,re_psi1,im_psi1"));
    let legs: std::collections::BTreeSet<&str> =
        lines.filter_map(|l| l.split(',').next()).collect();
    assert_eq!(legs.into_iter().collect::<Vec<_>>(), ["1", "2"]);
}

#[test]
fn json_price_output_satisfies_parity() {
    let out = run(&["--format", "json", "price", "--strikes", "25,35"]);
    assert_eq!(out.status.code(), Some(0));
    let rows: Value = serde_json::from_str(&stdout(&out)).unwrap();
    let rows = rows.as_array().unwrap();
    assert_eq!(rows.len(), 3);
    let df = (-0.01f64 * 0.5).exp();
    for row in rows {
        let k = row["strike"].as_f64().unwrap();
        let gap = row["call"].as_f64().unwrap() - row["put"].as_f64().unwrap();
        assert!((gap - df * (30.0 - k)).abs() < 1e-8, "{row}");
    }
}
