use std::fs;
use std::process::{Command, Output};

fn clawpath(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_clawpath"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn verify_preset_writes_a_passing_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o = clawpath(&["verify", "--preset", "burgers_shock", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}{}", stdout(&o), stderr(&o));
    assert!(stdout(&o).lines().any(|l| l.starts_with("pass  squeeze")));

    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    let checks = report["checks"].as_array().unwrap();
    assert!(!checks.is_empty());
    assert!(checks.iter().all(|c| c["pass"] == true));
    for name in ["solution.csv", "paths.csv", "flow.csv"] {
        assert!(out.join(name).exists(), "{name} missing");
    }
}

#[test]
fn failing_checks_set_the_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    // 0|2 under Burgers travels at speed 1 as a weak solution, but particles
    // leave the rising jump, so the compression bound fails.
    fs::write(
        &cfg,
        r#"{"name": "rising", "flux": "burgers", "T": 1.0,
            "initial": {"breakpoints": [0.0], "values": [0.0, 2.0], "traveling_speed": 1.0},
            "c_list": [1.0], "checks": ["compression"]}"#,
    )
    .unwrap();
    let o = clawpath(&["verify", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1), "{}{}", stdout(&o), stderr(&o));
    assert!(dir.path().join("report.json").exists());
}

#[test]
fn invalid_config_names_the_offending_key() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    fs::write(&cfg, r#"{"name": "x", "T": 1.0, "preset": "burgers_shock", "delta": -1.0}"#).unwrap();
    let o = clawpath(&["solve", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("delta"), "{}", stderr(&o));
}

#[test]
fn syntax_errors_report_a_position() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("broken.json");
    fs::write(&cfg, "{\"name\": \"x\",\n \"T\": }").unwrap();
    let o = clawpath(&["verify", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 2"), "{}", stderr(&o));
}

#[test]
fn unknown_preset_lists_the_alternatives() {
    let o = clawpath(&["trace", "--preset", "nope"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("example_3_1"));
}

#[test]
fn riemann_prints_velocity_and_fan() {
    let o = clawpath(&["riemann", "--ul", "2", "--ur", "1", "--c", "0", "--points", "11"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let v: f64 = text
        .lines()
        .next()
        .and_then(|l| l.strip_prefix("# V = "))
        .unwrap()
        .parse()
        .unwrap();
    assert!((v - 1.0).abs() < 1e-6, "{v}");
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "xi,u");
    assert_eq!(rows.len(), 12);
}

#[test]
fn trace_and_solve_write_their_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = clawpath(&["trace", "--preset", "example_3_1", "--out", out]);
    assert!(o.status.success(), "{}", stderr(&o));
    let paths = fs::read_to_string(dir.path().join("paths.csv")).unwrap();
    assert!(paths.lines().count() > 1);
    let o = clawpath(&["solve", "--preset", "example_3_1", "--out", out]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(dir.path().join("solution.csv").exists());
}

#[test]
fn presets_are_listed() {
    let o = clawpath(&["presets"]);
    assert!(o.status.success());
    for name in ["example_3_1", "example_6", "example_6_nonentropic"] {
        assert!(stdout(&o).contains(name));
    }
}
