//! End-to-end checks of the command-line surface: exit codes, artifacts,
//! and override handling.

use std::path::PathBuf;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_decaylab"))
}

fn temp_dir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("decaylab-cli-{name}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn simulate_scalar_writes_artifacts_and_exits_zero() {
    let dir = temp_dir("simulate");
    let config = dir.join("scalar.conf");
    std::fs::write(
        &config,
        "model = scalar\nt_end = 5\nprobe_times = 0.1, 1, 5\nfit_window = 1,5\namplitudes = 10\n",
    )
    .unwrap();
    let out = dir.join("run");
    let status = bin()
        .args(["simulate", "--config"])
        .arg(&config)
        .args(["--set", "alpha=1", "--set", "beta=3", "--out"])
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    assert!(out.join("trajectory.csv").exists());
    assert!(out.join("manifest.json").exists());
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn missing_config_exits_one_with_path() {
    let output = bin()
        .args(["simulate", "--config", "/no/such/file.conf"])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("/no/such/file.conf"), "{stderr}");
}

#[test]
fn invalid_override_exits_one_naming_the_key() {
    let output = bin()
        .args(["simulate", "--set", "beta=-1"])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("beta"), "{stderr}");
}

#[test]
fn runaway_sweep_with_expected_failure_exits_zero() {
    let dir = temp_dir("runaway");
    let out = dir.join("run");
    let output = bin()
        .args([
            "sweep",
            "--set",
            "model=scalar",
            "--set",
            "alpha=1",
            "--set",
            "beta=1",
            "--set",
            "amplitudes=100,1000,10000",
            "--set",
            "probe_times=1",
            "--set",
            "t_end=1",
            "--set",
            "fit_window=0.1,1",
            "--set",
            "expect_universality_fail=true",
            "--out",
        ])
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(
        output.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&output.stderr)
    );
    let manifest = std::fs::read_to_string(out.join("manifest.json")).unwrap();
    assert!(
        manifest.contains("\"universal_bound\": \"fail\""),
        "{manifest}"
    );
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn fit_decay_recovers_synthetic_power_law() {
    let dir = temp_dir("fit");
    let csv = dir.join("synthetic.csv");
    let mut text = String::from("t,E0\n");
    for i in 0..120 {
        let t = 1.0 * 1.08f64.powi(i);
        text.push_str(&format!("{t},{}\n", 7.0 * t.powi(-2)));
    }
    std::fs::write(&csv, text).unwrap();
    let output = bin()
        .args(["fit-decay", "--input"])
        .arg(&csv)
        .args(["--window", "1,10000"])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0));
    let stdout = String::from_utf8_lossy(&output.stdout);
    let slope: f64 = stdout
        .split_whitespace()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap();
    assert!((slope + 2.0).abs() < 1e-9, "{stdout}");
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn report_on_missing_directory_exits_one() {
    let status = bin().args(["report", "/no/such/run/dir"]).status().unwrap();
    assert_eq!(status.code(), Some(1));
}

#[test]
fn report_renders_existing_run() {
    let dir = temp_dir("report");
    let out = dir.join("run");
    let status = bin()
        .args([
            "verify-assumptions",
            "--set",
            "model=scalar",
            "--set",
            "beta=3",
            "--out",
        ])
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let output = bin().arg("report").arg(&out).output().unwrap();
    assert_eq!(output.status.code(), Some(0));
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("assumption_F3"), "{stdout}");
    assert!(out.join("summary.txt").exists());
    let _ = std::fs::remove_dir_all(&dir);
}
