use std::path::Path;
use std::process::{Command, Output};

use latticeway_cli::config::ExperimentConfig;
use latticeway_cli::report::{GapOutput, RatesOutput, SimulateOutput, TransformOutput, TRANSFORM_HEADER};

fn run(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_latticeway")).args(args).current_dir(dir).output().unwrap()
}

fn ok(args: &[&str], dir: &Path) -> String {
    let out = run(args, dir);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn rates_report_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let text = ok(&["rates"], dir.path());
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert!(v["report"]["R_achievable"].is_number());
    assert!(v["report"]["gap"].is_number());
    let parsed: RatesOutput = serde_json::from_str(&text).unwrap();
    let r = parsed.report.as_ref().unwrap();
    assert!(r.gap >= 0.0 && r.gap <= 0.5 * 3f64.log2() + 1e-9);
    assert_eq!(serde_json::to_string_pretty(&parsed).unwrap() + "\n", text);
}

#[test]
fn rates_csv_uses_twelve_digits() {
    let dir = tempfile::tempdir().unwrap();
    let text = ok(&["rates", "--noise", "0.3", "--format", "csv"], dir.path());
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("field,value"));
    let r_line = lines.next().unwrap();
    let value = r_line.strip_prefix("R_achievable,").unwrap();
    let digits = value.chars().filter(|c| c.is_ascii_digit()).collect::<String>();
    assert!(digits.trim_start_matches('0').len() <= 12, "{value}");
    let json: RatesOutput = serde_json::from_str(&ok(&["rates", "--noise", "0.3"], dir.path())).unwrap();
    let exact = json.report.unwrap().r_achievable;
    assert!((value.parse::<f64>().unwrap() - exact).abs() <= exact * 1e-11);
}

#[test]
fn noiseless_simulation_delivers_eight_each_way() {
    let dir = tempfile::tempdir().unwrap();
    let text = ok(&["simulate", "--noise", "0", "--blocks", "10", "--trace", "trace.csv"], dir.path());
    let out: SimulateOutput = serde_json::from_str(&text).unwrap();
    let r = out.result.unwrap();
    assert_eq!((r.delivered_a, r.delivered_b), (8, 8));
    assert_eq!(out.analysis_rate, None);
    let trace = std::fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    assert_eq!(trace.lines().next(), Some("block,node,role,field_combination,decode_ok"));
    assert!(trace.lines().skip(1).all(|l| l.ends_with(",true")));
}

#[test]
fn monte_carlo_report_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let text = ok(&["simulate", "--noise", "0.1", "--trials", "25", "--blocks", "8", "--out", "mc.json"], dir.path());
    assert!(text.is_empty());
    let body = std::fs::read_to_string(dir.path().join("mc.json")).unwrap();
    let out: SimulateOutput = serde_json::from_str(&body).unwrap();
    let mc = out.monte_carlo.unwrap();
    assert_eq!(mc.trials, 25);
    assert!(mc.message_error_rate.lower <= mc.message_error_rate.rate);
    assert!(out.analysis_rate.unwrap() > 0.0);
}

#[test]
fn transform_demo_reproduces_the_figure() {
    let dir = tempfile::tempdir().unwrap();
    let csv = ok(&["transform-demo", "--format", "csv"], dir.path());
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some(TRANSFORM_HEADER));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 25);
    let mut decoded: Vec<&str> = rows.iter().map(|r| r[4]).collect();
    decoded.sort();
    decoded.dedup();
    assert_eq!(decoded.len(), 10);
    for out in ["-2", "-1", "0", "1", "2"] {
        assert_eq!(rows.iter().filter(|r| r[7] == out).count(), 5, "output {out}");
    }
    let json: TransformOutput = serde_json::from_str(&ok(&["transform-demo"], dir.path())).unwrap();
    assert_eq!(json.candidates, ["-2", "-3/2", "-1", "-1/2", "0", "1/2", "1", "3/2", "2", "5/2"]);
    assert!(json.outputs.iter().all(|o| o.count == 5));
}

#[test]
fn gap_check_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let text = ok(&["gap-check", "--trials", "200", "--seed", "3"], dir.path());
    let out: GapOutput = serde_json::from_str(&text).unwrap();
    assert_eq!(out.audit.samples, 200);
    assert!(out.audit.holds);
}

#[test]
fn chain_runs_longer_lines() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.json",
        r#"{"command":"chain","network":{"powers":[1,4,4,1,1],"noise":[0,0,0,0,0]},"simulation":{"blocks":12}}"#,
    );
    let out: SimulateOutput = serde_json::from_str(&ok(&["chain", "--config", &cfg], dir.path())).unwrap();
    let r = out.result.unwrap();
    assert_eq!((r.delivered_a, r.delivered_b), (9, 9));
    // the config names its command
    let e = run(&["simulate", "--config", &cfg], dir.path());
    assert_eq!(e.status.code(), Some(2));
}

#[test]
fn config_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let unknown = write(dir.path(), "u.json", r#"{"network":{"powers":[1,4,4,1],"noise":[1,1,1,1],"gain":3}}"#);
    let out = run(&["rates", "--config", &unknown], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"]["kind"], "config");
    assert!(err["error"]["message"].as_str().unwrap().contains("gain"));
    assert_eq!(run(&["simulate", "--dim", "0"], dir.path()).status.code(), Some(2));
    assert_eq!(run(&["simulate", "--config", "missing.json"], dir.path()).status.code(), Some(2));
    assert_eq!(run(&["rates", "--noise", "0"], dir.path()).status.code(), Some(2));
    assert_eq!(run(&["nonsense"], dir.path()).status.code(), Some(2));
}

#[test]
fn infeasible_patterns_exit_three() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "p.json", r#"{"network":{"powers":[1,3,3,1],"noise":[1,1,1,1]}}"#);
    let out = run(&["simulate", "--config", &cfg], dir.path());
    assert_eq!(out.status.code(), Some(3));
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert!(err["error"]["message"].as_str().unwrap().contains("latticeway rates"));
    // truncation makes the same powers usable
    let cfg = write(
        dir.path(),
        "t.json",
        r#"{"network":{"powers":[1,3,3,1],"noise":[0,0,0,0]},"simulation":{"truncate":true}}"#,
    );
    let out: SimulateOutput = serde_json::from_str(&ok(&["simulate", "--config", &cfg], dir.path())).unwrap();
    assert!(out.plan.powers.iter().zip([1.0, 3.0, 3.0, 1.0]).all(|(t, p)| *t <= p));
}

#[test]
fn thread_cap_does_not_change_results() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["simulate", "--noise", "0.3", "--trials", "30"];
    let a = ok(&args, dir.path());
    let out =
        Command::new(env!("CARGO_BIN_EXE_latticeway")).args(args).env("LATTICEWAY_THREADS", "1").output().unwrap();
    assert_eq!(String::from_utf8(out.stdout).unwrap(), a);
    let bad =
        Command::new(env!("CARGO_BIN_EXE_latticeway")).arg("rates").env("LATTICEWAY_THREADS", "0").output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn default_config_serialises_and_reloads() {
    let dir = tempfile::tempdir().unwrap();
    let body = serde_json::to_string(&ExperimentConfig::default()).unwrap();
    let path = write(dir.path(), "d.json", &body);
    let back = ExperimentConfig::load(Some(Path::new(&path))).unwrap();
    assert_eq!(back, ExperimentConfig::default());
}
