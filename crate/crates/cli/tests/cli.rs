use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pushasep")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn data_rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines().skip(2).map(|l| l.split(',').map(String::from).collect()).collect()
}

#[test]
fn schur_value() {
    let o = run(&["exact", "schur", "--x", "0,1", "--v", "0.3,0.5"]);
    assert!(o.status.success());
    let rows = data_rows(&stdout(&o));
    assert_eq!(rows[0][2], "0.8");
    assert_eq!(rows[0][3], "4/5");
}

#[test]
fn geometric_pmf() {
    let o = run(&["exact", "pmf", "--n", "1", "--v", "0.5", "--max", "5"]);
    let rows = data_rows(&stdout(&o));
    assert_eq!(rows.len(), 6);
    assert_eq!(rows[0][1], "0.75");
    assert_eq!(rows[1][1], "0.1875");
}

#[test]
fn sup_cdf_rows_are_monotone() {
    let o = run(&["exact", "sup-cdf", "--n", "2", "--v", "0.3,0.5", "--eta", "0..10"]);
    let vals: Vec<f64> = data_rows(&stdout(&o)).iter().map(|r| r[1].parse().unwrap()).collect();
    assert_eq!(vals.len(), 11);
    assert!(vals.windows(2).all(|w| w[0] <= w[1]));
}

#[test]
fn simulate_writes_files_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for p in [&a, &b] {
        let o = run(&[
            "simulate", "pushasep-wall", "--n", "2", "--v", "0.3,0.5", "--replicas", "1000", "--seed", "7",
            "--out", p.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let ta = std::fs::read_to_string(&a).unwrap();
    let tb = std::fs::read_to_string(&b).unwrap();
    // the header records the output path, everything after it must match
    let body = |s: &str| s.split_once('\n').unwrap().1.to_string();
    assert_eq!(body(&ta), body(&tb));
    assert_eq!(data_rows(&ta).len(), 1000);
    assert!(ta.starts_with("# runspec {"));
    let manifest = std::fs::read_to_string(dir.path().join("a.csv.manifest.json")).unwrap();
    let m: serde_json::Value = serde_json::from_str(&manifest).unwrap();
    assert_eq!(m["runspec"]["seed"], 7);
    assert!(m["git_describe"].is_string());

    // replaying the manifest reproduces the file byte for byte
    let c = dir.path().join("c.csv");
    let o = run(&["replay", dir.path().join("a.csv.manifest.json").to_str().unwrap(), "--out", c.to_str().unwrap()]);
    assert!(o.status.success());
    let tc = std::fs::read_to_string(&c).unwrap();
    assert_eq!(data_rows(&ta), data_rows(&tc));
}

#[test]
fn thread_count_does_not_change_output() {
    let args = ["simulate", "x-array", "--v", "0.3,0.5,0.6", "--replicas", "50", "--seed", "3", "--horizon", "2"];
    let one = run(&[&["--threads", "1"], &args[..]].concat());
    let four = run(&[&["--threads", "4"], &args[..]].concat());
    assert!(one.status.success());
    assert_eq!(one.stdout, four.stdout);
}

#[test]
fn lpp_fields() {
    let o = run(&["simulate", "lpp-field", "--n", "3", "--v", "0.2,0.3,0.4", "--replicas", "10"]);
    let rows = data_rows(&stdout(&o));
    assert_eq!(rows.len(), 10);
    assert_eq!(rows[0].len(), 2 + 6);
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(run(&["simulate", "nope", "--v", "0.3"]).status.code(), Some(2));
    let o = run(&["simulate", "pushasep-wall", "--v", "0.3", "--n", "2"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--n"));
    assert_eq!(run(&["verify", "--suite", "nope"]).status.code(), Some(2));
    assert_eq!(run(&["simulate", "pushasep-wall", "--v", "1.5"]).status.code(), Some(2));
    assert_eq!(run(&["bogus"]).status.code(), Some(2));
}

#[test]
fn exact_suite_with_fraction_literals() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    let o = run(&["verify", "--suite", "exact", "--n", "2", "--v", "3/10,1/2", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let j: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let reports = j["reports"].as_array().unwrap();
    assert!(!reports.is_empty());
    assert!(reports.iter().all(|r| r["pass"] == true && r["discrepancy"]["value"] == "0"));
}

#[test]
fn json_format() {
    let o = run(&["exact", "sup-cdf", "--v", "1/2", "--eta", "0..2", "--format", "json"]);
    let j: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(j["rows"].as_array().unwrap().len(), 3);
    assert_eq!(j["rows"][0][1], 0.75);
}
