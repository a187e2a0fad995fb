use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_vortex-nav"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("stdout is not JSON ({e}): {}", String::from_utf8_lossy(&o.stdout)))
}

fn out_arg(dir: &Path) -> String {
    dir.display().to_string()
}

#[test]
fn help_documents_every_subcommand_and_exit_codes() {
    let o = run(&["--help"]);
    assert!(o.status.success());
    let h = String::from_utf8_lossy(&o.stdout);
    for c in ["geodesic", "classify", "shoot", "conjugate-scan", "wavefront", "splitting", "synthesis", "render"] {
        assert!(h.contains(c), "missing {c}");
    }
    assert!(h.contains("VZ_THREADS"));
    for code in ["0  success", "2  configuration", "3  numeric", "4  precondition"] {
        assert!(h.contains(code));
    }
    let o = run(&["shoot", "--help"]);
    let h = String::from_utf8_lossy(&o.stdout);
    for flag in ["--problem", "--mu", "--x0", "--xf", "--batch", "--n-starts", "--out", "--svg", "--viewport"] {
        assert!(h.contains(flag), "missing {flag}");
    }
}

#[test]
fn shoot_reproduces_the_strong_drift_example() {
    let dir = tempfile::tempdir().unwrap();
    let problem = dir.path().join("p.json");
    std::fs::write(&problem, r#"{"mu": 4.0, "x0": [2.0, 0.0]}"#).unwrap();
    let out = dir.path().join("o");
    let o = run(&["shoot", "--problem", problem.to_str().unwrap(), "--xf", "-2", "0", "--out", &out_arg(&out), "--svg"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));
    let r: Value = serde_json::from_str(&std::fs::read_to_string(out.join("shoot.json")).unwrap()).unwrap();
    let t = r["T"].as_f64().unwrap();
    assert!((t - 1.641).abs() < 0.005, "T = {t}");
    for k in ["T", "alpha", "residual", "fate", "type"] {
        assert!(!r[k].is_null(), "missing {k}");
    }
    assert!(out.join("shoot.csv").exists());
    assert!(out.join("shoot.svg").exists());
}

#[test]
fn batch_shoot_returns_one_result_per_target() {
    let dir = tempfile::tempdir().unwrap();
    let batch = dir.path().join("b.json");
    std::fs::write(&batch, r#"[[-2, 0], {"xf": [2.5, 0]}]"#).unwrap();
    let out = dir.path().join("o");
    let o = run(&["shoot", "--mu", "1", "--x0", "2", "0", "--batch", batch.to_str().unwrap(), "--out", &out_arg(&out)]);
    assert!(o.status.success());
    let r = &stdout_json(&o)["summary"];
    let ts: Vec<f64> = r.as_array().unwrap().iter().map(|v| v["T"].as_f64().unwrap()).collect();
    assert!((ts[0] - 2.826).abs() < 0.005 && (ts[1] - 0.56).abs() < 0.01, "{ts:?}");
}

#[test]
fn zero_time_wavefront_is_one_point() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["wavefront", "--mu", "1.8", "--x0", "3", "0", "--t", "0", "--n", "16", "--out", &out_arg(dir.path())]);
    assert!(o.status.success());
    let csv = std::fs::read_to_string(dir.path().join("wavefront.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines, ["t,branch,vertex,x1,x2", "0,0,0,3,0"]);
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let mut files = vec![];
    for k in 0..2 {
        let out = dir.path().join(k.to_string());
        let o = run(&["wavefront", "--mu", "1.8", "--x0", "3", "0", "--t", "2.9", "--n", "200", "--out", &out_arg(&out)]);
        assert!(o.status.success());
        files.push(std::fs::read(out.join("wavefront_crossings.csv")).unwrap());
        files.push(std::fs::read(out.join("wavefront.csv")).unwrap());
    }
    assert_eq!(files[0], files[2]);
    assert_eq!(files[1], files[3]);
}

#[test]
fn conjugate_scan_reports_no_conjugate_points() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&[
        "conjugate-scan", "--mu", "2", "--x0", "2.6666666666666665", "0", "--n", "64", "--tmax", "20",
        "--samples", "100", "--out", &out_arg(dir.path()),
    ]);
    assert!(o.status.success());
    assert_eq!(stdout_json(&o)["summary"]["conjugate_count"], 0);
}

#[test]
fn strong_drift_synthesis_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["synthesis", "--mu", "4", "--x0", "2", "0", "--out", &out_arg(dir.path())]);
    assert_eq!(o.status.code(), Some(4));
    assert_eq!(stdout_json(&o)["error"]["kind"], "refused");
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cases: Vec<Vec<&str>> = vec![
        vec!["shoot", "--xf", "1", "0"],
        vec!["shoot", "--mu", "1", "--x0", "0", "0", "--xf", "1", "0"],
        vec!["shoot", "--problem", "/nonexistent/p.json", "--xf", "1", "0"],
        vec!["geodesic", "--mu", "1", "--x0", "2", "0", "--t", "1"],
        vec!["wavefront", "--mu", "1", "--x0", "2", "0"],
        vec!["no-such-command"],
    ];
    for c in cases {
        let mut args = c.clone();
        let out = out_arg(dir.path());
        if c[0] != "no-such-command" {
            args.extend(["--out", &out]);
        }
        let o = run(&args);
        assert_eq!(o.status.code(), Some(2), "{c:?}");
        assert_eq!(stdout_json(&o)["error"]["exit_code"], 2);
    }
}

#[test]
fn bad_thread_count_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin()
        .env("VZ_THREADS", "zero")
        .args(["classify", "--mu", "1", "--x0", "2", "0", "--out", &out_arg(dir.path())])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    let o = bin()
        .env("VZ_THREADS", "2")
        .args(["classify", "--mu", "1", "--x0", "2", "0", "--out", &out_arg(dir.path())])
        .output()
        .unwrap();
    assert!(o.status.success());
}

#[test]
fn render_names_the_missing_column_and_handles_empty_input() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("d.csv");
    std::fs::write(&csv, "a,b\n1,2\n3,4\n").unwrap();
    let o = run(&["render", "--input", csv.to_str().unwrap(), "--x", "a", "--y", "zeta", "--out", &out_arg(dir.path())]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout_json(&o)["error"]["message"].as_str().unwrap().contains("zeta"));

    let empty = dir.path().join("e.csv");
    std::fs::write(&empty, "").unwrap();
    let o = run(&["render", "--input", empty.to_str().unwrap(), "--output", "e.svg", "--out", &out_arg(dir.path())]);
    assert!(o.status.success());
    let svg = std::fs::read_to_string(dir.path().join("e.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
}

#[test]
fn classify_and_geodesic_write_tables() {
    let dir = tempfile::tempdir().unwrap();
    let out = out_arg(dir.path());
    let o = run(&["classify", "--mu", "2", "--x0", "6", "0", "--grid", "8", "--reeb", "--out", &out, "--svg"]);
    assert!(o.status.success());
    let s = stdout_json(&o);
    let r = s["summary"]["reeb"]["argmin_radius"].as_f64().unwrap();
    assert!((r - 4.0 / 3f64.sqrt()).abs() < 1e-12);
    assert!(dir.path().join("reeb_foliation.svg").exists());
    let o = run(&["geodesic", "--mu", "4", "--x0", "2", "0", "--abnormal", "--backward", "--t", "1", "--out", &out]);
    assert!(o.status.success());
    let g = &stdout_json(&o)["summary"]["geodesics"];
    assert_eq!(g.as_array().unwrap().len(), 2);
    assert_eq!(g[0]["classification"]["type"], "Exceptional");
}
