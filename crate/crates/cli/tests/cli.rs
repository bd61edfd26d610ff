use std::path::Path;
use std::process::{Command, Output};

fn qcurve(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qcurve"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("QCURVE_OUT")
        .output()
        .expect("qcurve runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn read_json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn indicial_writes_report_and_prints_json() {
    let dir = tempfile::tempdir().unwrap();
    let o = qcurve(&["indicial", "--n", "5"], dir.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let printed: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let file = read_json(&dir.path().join("indicial.json"));
    assert_eq!(printed, file);
    assert_eq!(file["status"], "ok");
    assert_eq!(file["command"], "indicial");
    assert!(dir.path().join("indicial.csv").exists());
}

#[test]
fn dimension_below_four_is_a_configuration_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = qcurve(&["indicial", "--n", "3"], dir.path());
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("dimension must be ≥ 4 (got n = 3)"), "{}", stderr(&o));
    let o = qcurve(&["--n", "3"], dir.path());
    assert_eq!(code(&o), 2);
}

#[test]
fn missing_command_is_a_configuration_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = qcurve(&[], dir.path());
    assert_eq!(code(&o), 2);
}

#[test]
fn invalid_grid_and_weights_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&qcurve(&["solve", "--points", "4"], dir.path())), 2);
    assert_eq!(code(&qcurve(&["solve", "--r-max", "-1"], dir.path())), 2);
    assert_eq!(code(&qcurve(&["solve", "--n", "4", "--eta", "1e-3", "--nu", "1.6"], dir.path())), 2);
    assert_eq!(code(&qcurve(&["solve", "--tol", "0"], dir.path())), 2);
}

#[test]
fn solve_succeeds_and_diverging_solve_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = qcurve(&["solve", "--n", "4", "--amplitude", "1e-3", "--points", "2048"], dir.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let report = read_json(&dir.path().join("solve.json"));
    assert_eq!(report["report"]["converged"], true);

    let o = qcurve(&["solve", "--n", "5", "--amplitude", "10", "--points", "2048"], dir.path());
    assert_eq!(code(&o), 1);
    let report = read_json(&dir.path().join("solve.json"));
    assert_eq!(report["status"], "failed");
    assert_eq!(report["report"]["converged"], false);
}

#[test]
fn csv_format_prints_the_profile() {
    let dir = tempfile::tempdir().unwrap();
    let o = qcurve(&["solve", "--n", "4", "--points", "1024", "--format", "csv"], dir.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(text.lines().next(), Some("r,x,u,Q,R"));
    assert_eq!(text.lines().count(), 1025);
    assert_eq!(text, std::fs::read_to_string(dir.path().join("solve.csv")).unwrap());
    assert!(dir.path().join("solve.json").exists());
}

#[test]
fn ucurve_presets_and_degenerate_coefficients() {
    let dir = tempfile::tempdir().unwrap();
    let o = qcurve(&["ucurve", "--preset", "A", "--points", "2048"], dir.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let report = read_json(&dir.path().join("ucurve.json"));
    assert_eq!(report["report"]["converged"], true);

    let o = qcurve(&["ucurve", "--preset", "P", "--points", "2048"], dir.path());
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("kernel"), "{}", stderr(&o));

    let o = qcurve(&["ucurve", "--gamma", "0,-12,1"], dir.path());
    assert_eq!(code(&o), 2);
    let o = qcurve(&["ucurve", "--gamma", "1,2"], dir.path());
    assert_eq!(code(&o), 2);
    let o = qcurve(&["ucurve", "--preset", "Q"], dir.path());
    assert_eq!(code(&o), 2);
}

#[test]
fn config_file_supplies_command_and_values() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, r#"{"command": "indicial", "n": 6}"#).unwrap();
    let out = dir.path().join("out");
    let o = qcurve(&["--config", cfg.to_str().unwrap()], &out);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let report = read_json(&out.join("indicial.json"));
    assert_eq!(report["config"]["n"], 6);

    // Flags override the file.
    let o = qcurve(&["--config", cfg.to_str().unwrap(), "--n", "7"], &out);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(read_json(&out.join("indicial.json"))["config"]["n"], 7);
}

#[test]
fn malformed_or_unknown_config_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"command": "indicial", "dimension": 5}"#).unwrap();
    let o = qcurve(&["--config", bad.to_str().unwrap()], dir.path());
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("dimension"), "{}", stderr(&o));

    std::fs::write(&bad, "{not json").unwrap();
    assert_eq!(code(&qcurve(&["--config", bad.to_str().unwrap()], dir.path())), 2);
    let missing = dir.path().join("missing.json");
    assert_eq!(code(&qcurve(&["--config", missing.to_str().unwrap()], dir.path())), 2);
}

#[test]
fn output_directory_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("env_out");
    let o = Command::new(env!("CARGO_BIN_EXE_qcurve"))
        .args(["indicial", "--n", "4"])
        .env("QCURVE_OUT", &out)
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(out.join("indicial.json").exists());
    assert!(!dir.path().join("qcurve_out").exists());
}

#[test]
fn verify_checks_pass() {
    let dir = tempfile::tempdir().unwrap();
    for check in ["bessel", "covariance", "asymptotics"] {
        let o = qcurve(&["verify", check], dir.path());
        assert_eq!(code(&o), 0, "{check}: {}", stderr(&o));
        assert_eq!(read_json(&dir.path().join(format!("verify_{check}.json")))["status"], "ok");
    }
}

#[test]
fn repeated_runs_are_byte_identical() {
    let runs: [&[&str]; 3] = [
        &["kernel", "--n", "5", "--points", "1024"],
        &["sweep", "--n", "4", "--points", "1024"],
        &["verify", "covariance", "--pairs", "3", "--seed", "5"],
    ];
    for args in runs {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let oa = qcurve(args, a.path());
        let ob = qcurve(args, b.path());
        assert_eq!(code(&oa), 0, "{args:?}: {}", stderr(&oa));
        assert_eq!(oa.stdout, ob.stdout, "{args:?}");
        let mut names: Vec<_> = std::fs::read_dir(a.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
        names.sort();
        assert!(!names.is_empty());
        for name in names {
            let fa = std::fs::read(a.path().join(&name)).unwrap();
            let fb = std::fs::read(b.path().join(&name)).unwrap();
            assert_eq!(fa, fb, "{args:?}: {name:?}");
        }
    }
}
