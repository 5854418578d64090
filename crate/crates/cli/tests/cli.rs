use std::io::Write;
use std::process::{Command, Output};

fn adlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_adlab")).args(args).output().unwrap()
}

fn with_config(text: &str, args: &[&str]) -> Output {
    let mut f = tempfile();
    f.1.write_all(text.as_bytes()).unwrap();
    let path = f.0.to_str().unwrap().to_owned();
    let mut all = vec!["--config", path.as_str()];
    all.extend_from_slice(args);
    let out = adlab(&all);
    std::fs::remove_file(&f.0).ok();
    out
}

fn tempfile() -> (std::path::PathBuf, std::fs::File) {
    let name = format!("adlab-{}-{:?}.conf", std::process::id(), std::thread::current().id());
    let path = std::env::temp_dir().join(name.replace(['(', ')'], ""));
    let file = std::fs::File::create(&path).unwrap();
    (path, file)
}

#[test]
fn reference_check_passes() {
    let out = adlab(&["check"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
}

#[test]
fn unknown_key_is_a_config_error() {
    assert_eq!(with_config("system.nonsense = 1\n", &["check"]).status.code(), Some(2));
}

#[test]
fn eps_out_of_range_is_a_config_error() {
    assert_eq!(adlab(&["dyson1", "--eps", "1.5"]).status.code(), Some(2));
}

#[test]
fn closed_gap_fails_assumptions() {
    let out = with_config("system.e21 = 0\n", &["dyson1"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn thermal_reservoir_too_smooth_fails_a4() {
    let cfg = "reservoir.beta = 1\nreservoir.exponent = 2.5\nreservoir.m = 2\n";
    assert_eq!(with_config(cfg, &["check"]).status.code(), Some(3));
}

#[test]
fn scan_writes_a_row_per_point() {
    let out = with_config("scan.eps = 0.2, 0.1\nscan.lam = 0, 0.1\n", &["scan", "--threads", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("eps,lam,m,beta,t,p_free,p_correction,p_dyson1,omega3,residual,regime,runtime_ms"));
    assert_eq!(lines.len(), 5);
    assert!(lines[1..].iter().all(|l| l.ends_with(",ok")));
}

#[test]
fn regimes_follow_lambda_over_sqrt_eps() {
    let out = with_config("scan.eps = 0.01\nscan.lam = 0.001, 0.1, 10\n", &["regimes"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let regimes: Vec<&str> = text.lines().skip(1).map(|l| l.split(',').nth(4).unwrap()).collect();
    assert_eq!(regimes[0], "negligible-coupling");
    assert_eq!(regimes[1], "balanced");
    assert_ne!(regimes[2], "balanced");
}
