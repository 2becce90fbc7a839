//! Command-line behaviour: exit codes, reports and artifacts.

use std::path::Path;
use std::process::{Command, Output};

fn rheo(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rheo"))
        .args(args)
        .output()
        .expect("run rheo")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn text(o: &Output) -> String {
    format!(
        "{}{}",
        String::from_utf8_lossy(&o.stdout),
        String::from_utf8_lossy(&o.stderr)
    )
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn admit_bundled_bingham_passes_every_condition() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("bingham.json");
    let o = rheo(&["admit", "bingham", "--seed", "1", "--report", report.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", text(&o));
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(json["all_passed"], true);
    assert_eq!(json["seed"], 1);
    let reports = json["reports"].as_array().unwrap();
    assert_eq!(reports.len(), 5);
    assert!(reports.iter().all(|r| r["passed"] == true));
}

#[test]
fn admit_relation_file_from_disk() {
    let dir = tempfile::tempdir().unwrap();
    let file = write(
        dir.path(),
        "wall.conf",
        "relation = boundary\nkind = power_slip\ngamma = 2\nq = 3\n",
    );
    let o = rheo(&["admit", &file, "--samples", "16"]);
    assert_eq!(code(&o), 0, "{}", text(&o));
    assert!(text(&o).contains("g4"));
}

#[test]
fn admit_nonmonotone_fixture_fails_with_witness() {
    let o = rheo(&["admit", "nonmonotone_fixture"]);
    assert_eq!(code(&o), 1, "{}", text(&o));
    let out = text(&o);
    assert!(out.contains("G2star") && out.contains("FAIL"), "{out}");
    assert!(out.contains("witness"), "{out}");
}

#[test]
fn admit_empty_file_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let file = write(dir.path(), "empty.conf", "");
    let o = rheo(&["admit", &file]);
    assert_eq!(code(&o), 2, "{}", text(&o));
}

#[test]
fn unknown_relation_key_reports_line() {
    let dir = tempfile::tempdir().unwrap();
    let file = write(
        dir.path(),
        "bad.conf",
        "relation = bulk\nkind = navier_stokes\nnu = 1\ncolour = red\n",
    );
    let o = rheo(&["admit", &file]);
    assert_eq!(code(&o), 2);
    let out = text(&o);
    assert!(out.contains("line 4") && out.contains("colour"), "{out}");
}

#[test]
fn unknown_scenario_key_reports_line() {
    let dir = tempfile::tempdir().unwrap();
    let file = write(
        dir.path(),
        "bad.conf",
        "name = bad\nnx = 8\nny = 8\ndt = 0.1\nt_end = 1\nbulk.kind = navier_stokes\nbulk.nu = 1\nbulk.zeta = 2\nwall.kind = navier_slip\nwall.gamma = 1\n",
    );
    let o = rheo(&["run", &file]);
    assert_eq!(code(&o), 2);
    assert!(text(&o).contains("line 8"), "{}", text(&o));
}

#[test]
fn growth_exponent_checked_against_dimension() {
    let dir = tempfile::tempdir().unwrap();
    let base = "name = thin\nnx = 8\nny = 8\ndt = 0.05\nt_end = 0.1\nbulk.kind = power_law\nbulk.nu0 = 1\nbulk.r = 1.1\nwall.kind = navier_slip\nwall.gamma = 1\n";
    let ok = write(dir.path(), "d2.conf", base);
    assert_eq!(code(&rheo(&["run", &ok])), 0);
    let bad = write(dir.path(), "d3.conf", &format!("{base}dim = 3\n"));
    let o = rheo(&["run", &bad]);
    assert_eq!(code(&o), 2, "{}", text(&o));
}

#[test]
fn bad_usage_exits_two() {
    assert_eq!(code(&rheo(&[])), 2);
    assert_eq!(code(&rheo(&["sweep", "rest", "--param", "nu", "--values", "1,0.5"])), 2);
    assert_eq!(
        code(&rheo(&["sweep", "rest", "--param", "eps", "--values", "0.01,0.1"])),
        2
    );
    assert_eq!(code(&rheo(&["run", "no_such_scenario"])), 2);
    assert_eq!(code(&rheo(&["run", "rest", "--threads", "0"])), 2);
}

#[test]
fn run_writes_deterministic_artifacts() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let o = rheo(&[
            "run",
            "couette_stick_slip",
            "--seed",
            "4",
            "--threads",
            "1",
            "--out-dir",
            d.path().to_str().unwrap(),
        ]);
        assert_eq!(code(&o), 0, "{}", text(&o));
    }
    let read = |d: &tempfile::TempDir, f: &str| std::fs::read(d.path().join("couette_stick_slip").join(f)).unwrap();
    assert_eq!(read(&a, "metrics.json"), read(&b, "metrics.json"));
    for f in ["final.csv", "final.vtk", "ledger.csv", "profile.csv"] {
        assert!(!read(&a, f).is_empty(), "{f}");
    }
    let metrics: serde_json::Value = serde_json::from_slice(&read(&a, "metrics.json")).unwrap();
    assert_eq!(metrics["passed"], true);
    assert_eq!(metrics["seed"], 4);
}

#[test]
fn failing_tolerance_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let strict = "name = strict\noracle = poiseuille_power_slip\nnx = 4\nny = 8\nly = 1\ndt = 0.1\nt_end = 20\nforce_x = 1\nbulk.kind = navier_stokes\nbulk.nu = 1\nwall.kind = navier_slip\nwall.gamma = 1\ntol.profile_l2 = 1e-12\n";
    let file = write(dir.path(), "strict.conf", strict);
    let o = rheo(&["run", &file]);
    assert_eq!(code(&o), 1, "{}", text(&o));
    assert!(text(&o).contains("profile_l2"), "{}", text(&o));
}

#[test]
fn oracle_writes_profile_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("profile.csv");
    let o = rheo(&[
        "oracle",
        "bingham_plug",
        "--out",
        out.to_str().unwrap(),
        "--samples",
        "33",
    ]);
    assert_eq!(code(&o), 0, "{}", text(&o));
    let csv = std::fs::read_to_string(&out).unwrap();
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("y,u"));
    assert_eq!(lines.count(), 33);
    assert_eq!(code(&rheo(&["oracle", "rest", "--out", out.to_str().unwrap()])), 2);
}

#[test]
fn delta_sweep_on_rest_reports_zero_error() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("sweep.json");
    let o = rheo(&[
        "sweep",
        "rest",
        "--param",
        "delta",
        "--values",
        "0.1,0.01,0.001",
        "--report",
        report.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", text(&o));
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(json["param"], "delta");
    assert_eq!(json["error_measure"], "limit");
    assert!(json["errors"].as_array().unwrap().iter().all(|e| e == 0.0));
    assert_eq!(json["runs"].as_array().unwrap().len(), 3);
    // Zero errors do not decrease strictly.
    let o = rheo(&[
        "sweep",
        "rest",
        "--param",
        "delta",
        "--values",
        "0.1,0.01",
        "--require-monotone",
    ]);
    assert_eq!(code(&o), 1);
}

#[test]
fn list_names_bundled_files() {
    let o = rheo(&["list"]);
    assert_eq!(code(&o), 0);
    let out = text(&o);
    for name in [
        "poiseuille_NS_navier",
        "bingham_plug",
        "nonmonotone_fixture",
        "stick_slip",
    ] {
        assert!(out.contains(name), "{name}");
    }
}
