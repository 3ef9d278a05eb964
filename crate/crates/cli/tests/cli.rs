use std::path::Path;
use std::process::{Command, Output};

fn dirk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dirk"))
        .args(args)
        .env_remove("DIRK_JOBS")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

/// Rows of a CSV table keyed by header.
fn table(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(String::from).collect())
        .collect();
    (header, rows)
}

fn column(header: &[String], rows: &[Vec<String>], name: &str) -> Vec<Option<f64>> {
    let i = header.iter().position(|h| h == name).unwrap();
    rows.iter().map(|r| r[i].parse().ok()).collect()
}

fn schema(name: &str) -> serde_json::Value {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../schemas").join(name);
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn local_curve_tracks_closed_form() {
    let o = dirk(&["curve", "--scenario", "a1", "--pin", "mermin", "--grid", "2.83:4.0:0.05", "--level", "1+AB+AC"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let (h, rows) = table(&stdout(&o));
    assert_eq!(
        h,
        ["violation", "npa_bound", "analytic_bound", "strategy_lower_bound", "ns_bound", "status", "gap", "error"]
    );
    assert_eq!(rows.len(), 24);
    let npa = column(&h, &rows, "npa_bound");
    let analytic = column(&h, &rows, "analytic_bound");
    let strategy = column(&h, &rows, "strategy_lower_bound");
    for i in 0..rows.len() {
        let (n, a, s) = (npa[i].unwrap(), analytic[i].unwrap(), strategy[i].unwrap());
        assert!((n - a).abs() < 1e-6, "row {i}: {n} vs {a}");
        assert!(s <= n + 1e-6);
    }
}

#[test]
fn output_order_does_not_depend_on_jobs() {
    let args = ["curve", "--scenario", "a1b1", "--pin", "mermin", "--grid", "2.0:4.0:0.25", "--no-ns"];
    let one = dirk(&[&args[..], &["--jobs", "1"]].concat());
    let four = dirk(&[&args[..], &["--jobs", "4"]].concat());
    assert_eq!(code(&one), 0);
    assert_eq!(stdout(&one), stdout(&four));
}

#[test]
fn jobs_from_environment() {
    let o = Command::new(env!("CARGO_BIN_EXE_dirk"))
        .args(["nparty", "--n", "3"])
        .env("DIRK_JOBS", "0")
        .output()
        .unwrap();
    assert_eq!(code(&o), 2);
}

#[test]
fn curve_json_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("chsh.json");
    let o = dirk(&[
        "curve",
        "--scenario",
        "chsh_a1",
        "--pin",
        "chsh",
        "--grid",
        "2.0:2.8:3",
        "--count",
        "--format",
        "json",
        "--output",
        path.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    let rows: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    let rows = rows.as_array().unwrap();
    assert_eq!(rows.len(), 3);
    for r in rows {
        let (n, a) = (r["npa_bound"].as_f64().unwrap(), r["analytic_bound"].as_f64().unwrap());
        assert!((n - a).abs() < 1e-6);
    }
}

#[test]
fn configuration_errors_exit_2() {
    for args in [
        &["curve", "--scenario", "z9", "--pin", "mermin", "--grid", "2:3:0.5"][..],
        &["curve", "--scenario", "a1", "--pin", "mermin", "--grid", "2:3:0.5", "--tolerance", "0"],
        &["curve", "--scenario", "a1", "--pin", "mermin", "--grid", "2:3:0.5", "--level", "1+AX"],
        &["curve", "--scenario", "chsh_a1", "--pin", "mermin", "--grid", "2:3:0.5"],
        &["nparty", "--n", "6"],
        &["nparty", "--n", "3", "--npa-level", "1+AB"],
        &["nparty", "--n", "4", "--npa-level", "1+AB+AC+AD"],
        &["verify-sos", "--family", "local", "--theta", "0.3", "--phi", "0"],
        &["verify-sos", "--family", "local", "--phi", "0"],
    ] {
        assert_eq!(code(&dirk(args)), 2, "{args:?}");
    }
}

#[test]
fn infeasible_pin_is_a_solver_failure() {
    let o = dirk(&["bound", "--scenario", "a1", "--pin", "mermin=4.5"]);
    assert_eq!(code(&o), 3);
    let o = dirk(&["curve", "--scenario", "a1", "--pin", "mermin", "--grid", "3.9:4.1:0.1", "--no-ns"]);
    assert_eq!(code(&o), 0);
    let (h, rows) = table(&stdout(&o));
    let status = h.iter().position(|c| c == "status").unwrap();
    assert_eq!(rows[2][status], "infeasible");
    assert_eq!(column(&h, &rows, "npa_bound")[2], None);
}

#[test]
fn sos_grid_passes() {
    let o = dirk(&["verify-sos", "--family", "local", "--grid-theta", "0.7854:1.5708:20", "--grid-phi", "0:6.28:20"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let (h, rows) = table(&stdout(&o));
    assert_eq!(rows.len(), 400);
    assert!(column(&h, &rows, "residual").iter().all(|r| r.unwrap() <= 1e-10));
}

#[test]
fn sos_two_party_auto_normalised() {
    let o = dirk(&["verify-sos", "--family", "two_party", "--lambda", "0.75", "--mu", "0.4", "--exact"]);
    assert_eq!(code(&o), 0);
    let (h, rows) = table(&stdout(&o));
    assert!(column(&h, &rows, "residual")[0].unwrap() <= 1e-10);
}

#[test]
fn corrupted_target_exits_1() {
    let o = dirk(&["verify-sos", "--family", "local", "--theta", "1.0", "--phi", "0.5", "--corrupt", "1e-3"]);
    assert_eq!(code(&o), 1);
    let o = dirk(&["verify-sos", "--family", "two_party", "--grid-ratio", "1:3:3", "--corrupt", "1e-9"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn attack_report_matches_schema() {
    let o = dirk(&["attack-demo", "--check-marginal"]);
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stderr).contains("marginal local: true"));
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let validator = jsonschema::validator_for(&schema("attack_report.schema.json")).unwrap();
    let errors: Vec<String> = validator.iter_errors(&report).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "{errors:?}");
    let certificates = report["conditionals"].as_array().unwrap();
    assert_eq!(certificates.len(), 4);
    assert!(certificates.iter().all(|c| c["certificate"]["local"] == true));
}

#[test]
fn strategy_behavior_matches_schema() {
    let o = dirk(&["strategy", "--kind", "local_tangent", "--theta", "1.2", "--phi", "0.3", "--behavior"]);
    assert_eq!(code(&o), 0);
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let validator = jsonschema::validator_for(&schema("behavior.schema.json")).unwrap();
    assert!(validator.is_valid(&report["behavior"]));
    let m = report["values"]["mermin"].as_f64().unwrap();
    let mp = report["values"]["mermin_prime"].as_f64().unwrap();
    // Tangent value 2 + 2 sin(theta) along the direction phi.
    let along = 0.3f64.cos() * m + 0.3f64.sin() * mp;
    assert!((along - (2.0 + 2.0 * 1.2f64.sin())).abs() < 1e-10);
}

#[test]
fn nparty_table() {
    let o = dirk(&["nparty", "--n", "5", "--grid", "10:10:1", "--count"]);
    assert_eq!(code(&o), 0);
    let (h, rows) = table(&stdout(&o));
    assert!((column(&h, &rows, "conjecture_bound")[0].unwrap() - 0.625).abs() < 1e-12);

    let o = dirk(&["nparty", "--n", "4", "--grid", "7:7:1", "--count"]);
    let (h, rows) = table(&stdout(&o));
    assert!((column(&h, &rows, "conjecture_bound")[0].unwrap() - 7.0 / 16.0).abs() < 1e-10);
    assert!((column(&h, &rows, "strategy_lower_bound")[0].unwrap() - 7.0 / 16.0).abs() < 1e-10);
}

#[test]
fn ns_bound_below_min_of_listed() {
    let o = dirk(&["ns-bound", "--scenario", "a1b1c1", "--pin", "mermin=0", "--pin", "mermin_prime=3"]);
    assert_eq!(code(&o), 0);
    let r: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!((r["bound"].as_f64().unwrap() - 0.75).abs() < 1e-7);
}
