use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spectral-bvp"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

const DD: &str = r#"{"s": {"type": "fourier"}, "f": {"type": "dirichlet"}, "F": {"type": "dirichlet"}}"#;

#[test]
fn spectrum_of_dirichlet_dirichlet() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "p.json", DD);
    let out = run(&["spectrum", &input, "--count", "5"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("n,lambda,gamma,sqrt_residual"));
    for (n, line) in lines.enumerate() {
        let cols: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        let m = (n + 1) as f64;
        assert_eq!(cols[0], n as f64);
        assert!((cols[1] - m * m).abs() < 1e-9 * m * m);
        assert!((cols[2] - std::f64::consts::PI / (2.0 * m * m)).abs() < 1e-9);
    }
}

#[test]
fn outputs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(
        dir.path(),
        "p.json",
        r#"{"s": {"type": "fourier", "cos": [0.1, 0.2]}, "f": {"type": "rational", "h0": 1.0, "h": 0.5}, "F": {"type": "rational", "h": 0.0, "poles": [{"location": 3.0, "residue": 1.0}]}}"#,
    );
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let chi = dir.path().join("chi.csv");
    let traces = dir.path().join("traces.csv");
    for out in [&a, &b] {
        let status = run(&[
            "spectrum",
            &input,
            "--count",
            "8",
            "--out",
            out.to_str().unwrap(),
            "--chi-csv",
            chi.to_str().unwrap(),
            "--traces-csv",
            traces.to_str().unwrap(),
        ])
        .status;
        assert!(status.success());
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(std::fs::read_to_string(&chi).unwrap().lines().count(), 402);
    let header = std::fs::read_to_string(&traces)
        .unwrap()
        .lines()
        .next()
        .unwrap()
        .to_string();
    assert_eq!(header.split(',').count(), 9);
}

#[test]
fn chain_records_two_steps() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(
        dir.path(),
        "p.json",
        r#"{"s": {"type": "fourier", "cos": [0.2]}, "f": {"type": "rational", "h": 0.3, "poles": [{"location": 2.0, "residue": 1.0}]}, "F": {"type": "rational", "h": 0.0}}"#,
    );
    let out = run(&["chain", &input]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["records"].as_array().unwrap().len(), 2);
    assert_eq!(v["removed_pairs"].as_array().unwrap().len(), 1);
}

#[test]
fn oscillation_counts_match() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(
        dir.path(),
        "p.json",
        r#"{"s": {"type": "fourier", "sin": [0.3]}, "f": {"type": "rational", "h": 0.0, "poles": [{"location": 1.5, "residue": 0.5}]}, "F": {"type": "dirichlet"}}"#,
    );
    let out = run(&["oscillation", &input, "--count", "8"]);
    assert!(out.status.success());
    for line in String::from_utf8(out.stdout).unwrap().lines().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        assert_eq!(cols[2], cols[3]);
    }
}

#[test]
fn inverse_data_recovers_zero_potential() {
    let dir = tempfile::tempdir().unwrap();
    let eig: Vec<String> = (1..=12).map(|m| format!("{}", m * m)).collect();
    let gam: Vec<String> = (1..=12)
        .map(|m| format!("{:e}", std::f64::consts::PI / (2.0 * (m * m) as f64)))
        .collect();
    let input = write(
        dir.path(),
        "d.json",
        &format!(
            r#"{{"ind_f": -1, "ind_F": -1, "eigenvalues": [{}], "norming_constants": [{}]}}"#,
            eig.join(","),
            gam.join(",")
        ),
    );
    let out = run(&["inverse-data", &input]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["problem"]["f"]["type"], "dirichlet");
}

#[test]
fn schema_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(
        dir.path(),
        "bad.json",
        r#"{"s": {"type": "fourier"}, "f": {"type": "robin"}, "F": {"type": "dirichlet"}}"#,
    );
    let out = run(&["spectrum", &bad]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 1"));
    let residue = write(
        dir.path(),
        "neg.json",
        r#"{"s": {"type": "fourier"}, "f": {"type": "rational", "h": 0.0, "poles": [{"location": 1.0, "residue": -1.0}]}, "F": {"type": "dirichlet"}}"#,
    );
    assert_eq!(run(&["spectrum", &residue]).status.code(), Some(2));
    let missing = dir.path().join("missing.json");
    assert_eq!(run(&["chain", missing.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn numerical_failures_exit_three() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "p.json", DD);
    let out = run(&["transform-hat", &input]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("numerical failure"));
}

#[test]
fn transform_tilde_reports_branch() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "p.json", DD);
    let out = run(&["transform-tilde", &input, "--mu", "0.5", "--nu", "1.0"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["branch"], "below");
    assert_eq!(v["record"]["J"], 1);
}

#[test]
fn verify_exit_codes() {
    let pass = run(&["verify", "--suite", "1,4"]);
    assert_eq!(pass.status.code(), Some(0));
    let text = String::from_utf8(pass.stdout).unwrap();
    assert_eq!(text.lines().filter(|l| l.starts_with("PASS")).count(), 2);
    let fail = run(&["verify", "--suite", "6"]);
    assert_eq!(fail.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&fail.stderr).contains("asymptotic residuals"));
    assert_eq!(run(&["verify", "--suite", "99"]).status.code(), Some(2));
}
