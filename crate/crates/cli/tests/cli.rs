use std::path::Path;
use std::process::{Command, Output};

fn ratiorep(args: &[&str], env: &[(&str, &Path)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_ratiorep"));
    cmd.args(args).env_remove("RATIOREP_OUTPUT_DIR").env_remove("RATIOREP_THREADS");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

const TINY: &[&str] = &["--d-x", "2", "--t", "300", "--t-test", "100", "--epochs", "2", "--batch-size", "64", "--seeds", "1,2"];

fn with_tiny<'a>(head: &[&'a str], dir: &'a str) -> Vec<&'a str> {
    let mut v = head.to_vec();
    v.extend_from_slice(TINY);
    v.extend_from_slice(&["--output-dir", dir]);
    v
}

#[test]
fn ica_run_writes_plot_data() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let out = ratiorep(&with_tiny(&["ica-run", "--method", "lr"], d), &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let runs = std::fs::read_to_string(dir.path().join("runs.csv")).unwrap();
    assert_eq!(runs.lines().count(), 3);
    assert!(dir.path().join("aggregate.csv").exists());
    assert!(dir.path().join("config.toml").exists());
}

#[test]
fn robustness_sweep_has_a_series_per_method() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let out = ratiorep(&with_tiny(&["robustness-sweep", "--epsilons", "0,0.2", "--threads", "2"], d), &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let agg = std::fs::read_to_string(dir.path().join("aggregate.csv")).unwrap();
    assert!(agg.starts_with("series,epsilon,"));
    for m in ["lr", "gamma", "dv"] {
        assert_eq!(agg.lines().filter(|l| l.starts_with(&format!("{m},"))).count(), 2, "{agg}");
    }
}

#[test]
fn config_errors_exit_2_and_name_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    for (flag, value, field) in [("--epsilon", "1.0", "epsilon"), ("--d-u", "0", "d_u"), ("--method", "svm", "method")] {
        let out = ratiorep(&with_tiny(&["ica-run", flag, value], d), &[]);
        assert_eq!(out.status.code(), Some(2));
        assert!(String::from_utf8_lossy(&out.stderr).contains(field));
    }
    let missing = ratiorep(&["ica-run", "--config", "/nonexistent/config.toml"], &[]);
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("c.toml");
    std::fs::write(&file, "method = \"gamma\"\nepochs = 2\nd_x = 2\nt = 300\nt_test = 100\nbatch_size = 64\nseeds = [4]\n").unwrap();
    let out_dir = dir.path().join("out");
    let out = ratiorep(&["ica-run", "--config", file.to_str().unwrap(), "--method", "dv", "--output-dir", out_dir.to_str().unwrap()], &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let runs = std::fs::read_to_string(out_dir.join("runs.csv")).unwrap();
    assert!(runs.lines().nth(1).unwrap().contains(",dv,4,"));
}

#[test]
fn output_dir_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec!["gaussian-ratio"];
    args.extend_from_slice(&["--t", "300", "--t-test", "100", "--epochs", "2", "--seeds", "0"]);
    let out = ratiorep(&args, &[("RATIOREP_OUTPUT_DIR", dir.path())]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("records.json").exists());
}

#[test]
fn plot_data_rebuilds_from_records() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    assert_eq!(ratiorep(&with_tiny(&["ica-run"], d), &[]).status.code(), Some(0));
    let other = dir.path().join("replot");
    let records = dir.path().join("records.json");
    let out = ratiorep(&["plot-data", "--records", records.to_str().unwrap(), "--output-dir", other.to_str().unwrap()], &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(
        std::fs::read_to_string(other.join("aggregate.csv")).unwrap(),
        std::fs::read_to_string(dir.path().join("aggregate.csv")).unwrap()
    );
}

#[test]
fn verify_with_injected_bug_fails_gradient_checks() {
    let dir = tempfile::tempdir().unwrap();
    let out = ratiorep(&["verify", "--inject-bug", "--output-dir", dir.path().to_str().unwrap()], &[]);
    assert_eq!(out.status.code(), Some(1));
    let stdout = String::from_utf8_lossy(&out.stdout);
    let grad_lines: Vec<_> = stdout.lines().filter(|l| l.contains(" grad/")).collect();
    assert_eq!(grad_lines.len(), 24);
    assert!(grad_lines.iter().all(|l| l.starts_with("FAIL")), "{stdout}");
    assert!(dir.path().join("verify.json").exists());
}
