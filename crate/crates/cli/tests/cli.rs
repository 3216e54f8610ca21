use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn tfheat(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tfheat"))
        .arg("--output-dir")
        .arg(out)
        .args(args)
        .env_remove("TFHEAT_OUTPUT_DIR")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn read(p: impl AsRef<Path>) -> String {
    std::fs::read_to_string(p.as_ref()).unwrap_or_else(|e| panic!("{}: {e}", p.as_ref().display()))
}

#[test]
fn specfun_prints_mittag_leffler_value() {
    let dir = TempDir::new().unwrap();
    let o = tfheat(dir.path(), &["specfun", "ml", "--alpha", "0.5", "--z", "-1"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: f64 = stdout(&o).trim().parse().unwrap();
    // E_{1/2,1}(-1) = e·erfc(1).
    assert!((v - 0.427_583_576_155_807).abs() < 1e-12, "{v}");
    let json: serde_json::Value = serde_json::from_str(&read(dir.path().join("specfun.json"))).unwrap();
    assert_eq!(json["function"], "ml");
    assert!(dir.path().join("specfun.manifest").exists());
}

#[test]
fn set_overrides_match_typed_flags() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    let typed = tfheat(a.path(), &["specfun", "ml", "--alpha", "0.7", "--beta", "0.7", "--z", "-2.5"]);
    let set = tfheat(
        b.path(),
        &[
            "specfun",
            "--set",
            "specfun.function=ml",
            "--set",
            "specfun.alpha=0.7",
            "--set",
            "specfun.beta=0.7",
            "--set",
            "specfun.z=-2.5",
        ],
    );
    assert!(typed.status.success() && set.status.success(), "{}{}", stderr(&typed), stderr(&set));
    assert_eq!(stdout(&typed), stdout(&set));
    assert_eq!(read(a.path().join("specfun.manifest")), read(b.path().join("specfun.manifest")));
}

#[test]
fn set_wins_over_flag() {
    let dir = TempDir::new().unwrap();
    let o = tfheat(dir.path(), &["specfun", "gamma", "--x", "3", "--set", "specfun.x=5"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o).trim().parse::<f64>().unwrap(), 24.0);
}

#[test]
fn unknown_key_is_a_validation_error() {
    let dir = TempDir::new().unwrap();
    let o = tfheat(dir.path(), &["specfun", "gamma", "--x", "3", "--set", "specfun.bogus=1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("bogus"), "{}", stderr(&o));

    let o = tfheat(dir.path(), &["solve", "--set", "nonsense.key=1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("nonsense"), "{}", stderr(&o));
}

#[test]
fn out_of_range_and_malformed_flags_exit_one() {
    let dir = TempDir::new().unwrap();
    let o = tfheat(dir.path(), &["specfun", "ml", "--alpha", "1.5", "--z", "-1"]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    let o = tfheat(dir.path(), &["specfun", "ml", "--alpha", "abc"]);
    assert_eq!(o.status.code(), Some(1));
    let o = tfheat(dir.path(), &["solve", "--family", "nope", "--T", "1"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn help_documents_units_and_ranges() {
    let dir = TempDir::new().unwrap();
    let o = tfheat(dir.path(), &["solve", "--help"]);
    assert!(o.status.success());
    let h = stdout(&o);
    for flag in ["--alpha", "--p", "--T", "--half-width", "--time-steps"] {
        assert!(h.contains(flag), "missing {flag} in\n{h}");
    }
    assert!(h.contains("(0, 1]"), "{h}");
}

#[test]
fn check_reports_criteria() {
    let dir = TempDir::new().unwrap();
    let o = tfheat(
        dir.path(),
        &["check", "--N", "1", "--p", "3", "--alpha", "0.5", "--family", "constant", "--c", "0.5", "--T", "1"],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(!stdout(&o).trim().is_empty());
    let json: serde_json::Value = serde_json::from_str(&read(dir.path().join("check.json"))).unwrap();
    assert!(json.is_array() || json.is_object());
}

#[test]
fn solve_manifest_reproduces_itself() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    let args = [
        "solve",
        "--N",
        "1",
        "--p",
        "2",
        "--alpha",
        "0.6",
        "--family",
        "constant",
        "--c",
        "0.5",
        "--T",
        "0.5",
        "--half-width",
        "4",
        "--points",
        "16",
        "--time-steps",
        "64",
    ];
    let first = tfheat(a.path(), &args);
    assert!(first.status.success(), "{}", stderr(&first));
    let manifest = a.path().join("solve.manifest");
    let second = tfheat(b.path(), &["solve", "--config", manifest.to_str().unwrap()]);
    assert!(second.status.success(), "{}", stderr(&second));
    assert_eq!(read(&manifest), read(b.path().join("solve.manifest")));
    assert_eq!(read(a.path().join("solve_sup.csv")), read(b.path().join("solve_sup.csv")));
}

#[test]
fn unbracketed_lifespan_exits_two_with_diagnostics() {
    let dir = TempDir::new().unwrap();
    // Lifespan near 1e24; eight probes with steps doubling from 0.001 in ln T stop near T = 1.3.
    let o = tfheat(
        dir.path(),
        &[
            "lifespan",
            "--N",
            "1",
            "--p",
            "2",
            "--alpha",
            "0.5",
            "--family",
            "constant",
            "--c",
            "1e-12",
            "--half-width",
            "4",
            "--points",
            "16",
            "--time-steps",
            "32",
            "--budget",
            "8",
            "--ln-step",
            "0.001",
        ],
    );
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    let err = stderr(&o);
    assert!(err.contains("diagnostics:"), "{err}");
    assert!(dir.path().join("lifespan.json").exists());
}

#[test]
fn output_dir_from_environment() {
    let dir = TempDir::new().unwrap();
    let target = dir.path().join("from-env");
    let o = Command::new(env!("CARGO_BIN_EXE_tfheat"))
        .args(["specfun", "gamma", "--x", "4"])
        .env("TFHEAT_OUTPUT_DIR", &target)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(target.join("specfun.json").exists());
}

const TINY_SUITE: &str = "\
N = 1
p = 3
alpha = 0.5
T = 0.1
amplitudes = 1
[grid]
half_width = 4
points = 32
[solver]
time_steps = 32
";

#[test]
fn calibrate_guards_the_frozen_suite() {
    let dir = TempDir::new().unwrap();
    let suite = dir.path().join("suite.txt");
    std::fs::write(&suite, TINY_SUITE).unwrap();
    let suite = suite.to_str().unwrap();

    let refused = tfheat(dir.path(), &["calibrate", "--suite", suite, "--version", "9", "--date", "2026-01-02"]);
    assert_eq!(refused.status.code(), Some(1));
    assert!(stderr(&refused).contains("hash"), "{}", stderr(&refused));

    let forced = tfheat(
        dir.path(),
        &["calibrate", "--suite", suite, "--version", "9", "--date", "2026-01-02", "--force"],
    );
    assert!(forced.status.success(), "{}", stderr(&forced));
    let constants = read(dir.path().join("constants.txt"));
    assert!(constants.contains("2026-01-02"), "{constants}");
    assert!(dir.path().join("calibration_cases.csv").exists());
}

#[test]
fn calibrate_rejects_bad_date() {
    let dir = TempDir::new().unwrap();
    let o = tfheat(dir.path(), &["calibrate", "--date", "19-10-2026"]);
    assert_eq!(o.status.code(), Some(1));
}
