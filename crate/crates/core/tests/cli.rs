use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn fracqjc(args: &[&str], threads: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_fracqjc"));
    cmd.args(args).env_remove("FRACQJC_THREADS");
    if let Some(n) = threads {
        cmd.env("FRACQJC_THREADS", n);
    }
    cmd.output().expect("binary runs")
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap()
}

fn data_rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines().skip(2).map(|l| l.split(',').map(str::to_string).collect()).collect()
}

#[test]
fn simulate_vacuum_rabi() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("vac.csv");
    let o = fracqjc(
        &["simulate", "--alpha", "1.0", "--beta-re", "0", "--t-max", "3", "--steps", "31", "--out", out.to_str().unwrap()],
        None,
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = read(&out);
    assert!(csv.starts_with("# fracqjc timeseries v1\nt,alpha,W,S_vn,norm,unitarity_residual,metric_residual,delta_unwrap_flag\n"));
    let rows = data_rows(&csv);
    assert_eq!(rows.len(), 31);
    for r in rows {
        let t: f64 = r[0].parse().unwrap();
        let w: f64 = r[2].parse().unwrap();
        assert!((w - (2.0 * t).cos()).abs() < 1e-12);
    }
}

#[test]
fn output_is_independent_of_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for (path, threads) in [(&a, "1"), (&b, "3")] {
        let args = [
            "simulate",
            "--alpha",
            "0.75,0.5",
            "--t-max",
            "10",
            "--steps",
            "60",
            "--observables",
            "inversion,entropy,diagnostics",
            "--out",
            path.to_str().unwrap(),
        ];
        assert!(fracqjc(&args, Some(threads)).status.success());
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    for r in data_rows(&read(&a)) {
        assert!(!r[6].is_empty());
        assert!(r[6].parse::<f64>().unwrap() < 1e-8);
    }
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    let out = dir.path().join("from_file.csv");
    std::fs::write(
        &cfg,
        format!(
            "alphas = [0.5]\nt_max = 4.0\nsteps = 9\nobservables = [\"inversion\", \"amplitudes\"]\noutput_path = {:?}\n\n[dyson0]\nkappa0 = 0.3\nlambda0_re = 0.2\nlambda0_im = 0.1\nLambda0 = 1.5\n",
            out.to_str().unwrap()
        ),
    )
    .unwrap();
    let o = fracqjc(&["simulate", "--config", cfg.to_str().unwrap(), "--steps", "5"], None);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = data_rows(&read(&out));
    assert_eq!(rows.len(), 5);
    assert!(rows.iter().all(|r| r[1] == "5.0000000000000000e-1" && r[3].is_empty()));
    let amps = read(&dir.path().join("from_file.amplitudes.csv"));
    assert!(amps.starts_with("# fracqjc amplitudes v1\nt,alpha,atom,n,re,im\n"));
}

#[test]
fn validate_reports_findings() {
    let o = fracqjc(&["validate", "--alpha", "1.2", "--Lambda0", "-1"], None);
    assert_eq!(o.status.code(), Some(1));
    let findings: Value = serde_json::from_slice(&o.stdout).unwrap();
    let text = findings.to_string();
    assert!(text.contains("alpha out of (0,1]"));
    assert!(text.contains("must be positive"));

    let o = fracqjc(&["validate"], None);
    assert!(o.status.success());
    assert_eq!(serde_json::from_slice::<Value>(&o.stdout).unwrap(), Value::Array(vec![]));
}

#[test]
fn errors_are_json_records() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.csv");
    let o = fracqjc(&["simulate", "--t-max", "0", "--out", out.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(2));
    let rec: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(rec["error"], "InvalidConfig");
    assert!(!out.exists());

    let o = fracqjc(&["--help"], Some("0"));
    assert!(o.status.success());
    let o = fracqjc(&["validate"], Some("zero"));
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn hidden_mlf_eval() {
    let o = fracqjc(&["mlf", "eval", "--alpha", "0.5", "--re", "-1", "--im", "0"], None);
    assert!(o.status.success());
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!((v["re"].as_f64().unwrap() - 0.427_583_576_155_807).abs() < 1e-13);
    assert_eq!(v["method"], "Series");
    let o = fracqjc(&["mlf", "eval", "--alpha", "0.5", "--re", "30", "--im", "-30"], None);
    assert_eq!(serde_json::from_slice::<Value>(&o.stdout).unwrap()["method"], "Contour");
    let help = String::from_utf8(fracqjc(&["--help"], None).stdout).unwrap();
    assert!(!help.contains("mlf"));
}
