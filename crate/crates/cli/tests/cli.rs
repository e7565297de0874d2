//! Black-box tests of the `ftind` binary: exit codes, help coverage,
//! determinism, and the file contracts of each subcommand.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ftind"))
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    bin().current_dir(dir).args(args).output().expect("spawn ftind")
}

fn stdout_str(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr_str(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// Small, fast run config: 380 samples at 200 Hz.
const SMALL_CONFIG: &str = r#"
seed = 11
rate_hz = 200.0

[schedule]
unloaded_seconds = 0.1
per_axis_seconds = 0.3
peak_fraction = 0.8
"#;

fn write_small_config(dir: &Path) -> PathBuf {
    let path = dir.join("run.toml");
    fs::write(&path, SMALL_CONFIG).unwrap();
    path
}

#[test]
fn every_subcommand_has_help_listing_its_flags() {
    let flags: [(&str, &[&str]); 8] = [
        ("simulate", &["--config", "--seed", "--out", "--strict"]),
        ("fit", &["--input", "--family", "--out"]),
        ("calibrate", &["--config", "--input", "--out"]),
        ("decode", &["--config", "--input", "--calibration", "--out"]),
        (
            "evaluate",
            &["--config", "--input", "--calibration", "--sigma-multiplier", "--out"],
        ),
        ("replay", &["--input", "--rate", "--sink", "--out"]),
        ("report", &["--eval", "--curve", "--out"]),
        ("demo", &["--config", "--seed", "--out"]),
    ];
    for (sub, expected) in flags {
        let out = bin().args([sub, "--help"]).output().unwrap();
        assert_eq!(out.status.code(), Some(0), "{sub} --help should exit 0");
        let text = stdout_str(&out);
        for flag in expected {
            assert!(text.contains(flag), "{sub} --help is missing {flag}:\n{text}");
        }
    }
}

#[test]
fn help_and_version_exit_zero() {
    for args in [&["--help"][..], &["--version"][..]] {
        let out = bin().args(args).output().unwrap();
        assert_eq!(out.status.code(), Some(0));
    }
    let text = stdout_str(&bin().arg("--help").output().unwrap());
    for sub in ["simulate", "fit", "calibrate", "decode", "evaluate", "replay", "report", "demo"] {
        assert!(text.contains(sub), "top-level help is missing {sub}");
    }
}

#[test]
fn usage_errors_exit_one() {
    let cases: [&[&str]; 3] = [
        &["simulate", "--bogus-flag"],
        &["no-such-subcommand"],
        &["fit", "--input", "x.csv", "--family", "quintic"],
    ];
    for args in cases {
        let out = bin().args(args).output().unwrap();
        assert_eq!(out.status.code(), Some(1), "{args:?} should exit 1");
    }
}

#[test]
fn config_errors_exit_two() {
    let tmp = TempDir::new().unwrap();
    let out = run_in(tmp.path(), &["simulate", "--config", "missing.toml", "--out", "o"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_str(&out).contains("missing.toml"));

    fs::write(tmp.path().join("bad.toml"), "rate_hz = -1.0\n").unwrap();
    let out = run_in(tmp.path(), &["simulate", "--config", "bad.toml", "--out", "o"]);
    assert_eq!(out.status.code(), Some(2));

    fs::write(tmp.path().join("unknown.toml"), "not_a_field = 3\n").unwrap();
    let out = run_in(tmp.path(), &["simulate", "--config", "unknown.toml", "--out", "o"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn simulate_is_deterministic_and_seed_sensitive() {
    let tmp = TempDir::new().unwrap();
    write_small_config(tmp.path());
    for out_dir in ["a", "b"] {
        let out = run_in(
            tmp.path(),
            &["simulate", "--config", "run.toml", "--out", out_dir],
        );
        assert_eq!(out.status.code(), Some(0), "{}", stderr_str(&out));
    }
    for name in [
        "dataset.csv",
        "dataset.ftlog",
        "curve_vertical.csv",
        "curve_horizontal.csv",
        "config.json",
        "manifest.json",
    ] {
        let a = fs::read(tmp.path().join("a").join(name)).unwrap();
        let b = fs::read(tmp.path().join("b").join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between identical runs");
    }
    let out = run_in(
        tmp.path(),
        &["simulate", "--config", "run.toml", "--seed", "99", "--out", "c"],
    );
    assert_eq!(out.status.code(), Some(0));
    let a = fs::read(tmp.path().join("a/dataset.csv")).unwrap();
    let c = fs::read(tmp.path().join("c/dataset.csv")).unwrap();
    assert_ne!(a, c, "different seeds must change the dataset");
}

#[test]
fn manifest_checksums_match_the_files() {
    let tmp = TempDir::new().unwrap();
    write_small_config(tmp.path());
    let out = run_in(tmp.path(), &["simulate", "--config", "run.toml", "--out", "o"]);
    assert_eq!(out.status.code(), Some(0));
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("o/manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["seed"], 11);
    let files = manifest["files"].as_array().unwrap();
    assert_eq!(files.len(), 5);
    for entry in files {
        let name = entry["name"].as_str().unwrap();
        let bytes = fs::read(tmp.path().join("o").join(name)).unwrap();
        assert_eq!(entry["bytes"].as_u64().unwrap() as usize, bytes.len(), "{name}");
        assert_eq!(
            entry["sha256"].as_str().unwrap(),
            ftind_core::config::sha256_hex(&bytes),
            "{name} checksum"
        );
    }
    // The manifest JSON (and stdout copy) never embeds wall-clock state.
    let text = fs::read_to_string(tmp.path().join("o/manifest.json")).unwrap();
    assert!(!text.contains("time"), "manifest must not carry timestamps");
}

#[test]
fn strict_simulation_rejects_out_of_range_schedules() {
    let tmp = TempDir::new().unwrap();
    let config = "seed = 1\nrate_hz = 200.0\n[schedule]\nunloaded_seconds = 0.1\n\
                  per_axis_seconds = 0.2\npeak_fraction = 1.3\n";
    fs::write(tmp.path().join("hot.toml"), config).unwrap();
    let strict = run_in(
        tmp.path(),
        &["simulate", "--config", "hot.toml", "--strict", "--out", "s"],
    );
    assert_eq!(strict.status.code(), Some(2), "{}", stderr_str(&strict));
    assert!(stderr_str(&strict).contains("exceeds"));
    // Without --strict the same schedule is allowed (counts saturate instead).
    let loose = run_in(tmp.path(), &["simulate", "--config", "hot.toml", "--out", "l"]);
    assert_eq!(loose.status.code(), Some(0), "{}", stderr_str(&loose));
}

#[test]
fn config_search_uses_the_environment_directory() {
    let tmp = TempDir::new().unwrap();
    let cfg_dir = TempDir::new().unwrap();
    write_small_config(cfg_dir.path());
    let out = bin()
        .current_dir(tmp.path())
        .env("FTIND_CONFIG_DIR", cfg_dir.path())
        .args(["simulate", "--config", "run.toml", "--out", "o"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", stderr_str(&out));
    assert!(tmp.path().join("o/dataset.csv").is_file());
}

#[test]
fn pipeline_produces_consistent_artifacts() {
    let tmp = TempDir::new().unwrap();
    write_small_config(tmp.path());
    let steps: [&[&str]; 4] = [
        &["simulate", "--config", "run.toml", "--out", "o"],
        &["calibrate", "--config", "run.toml", "--input", "o/dataset.csv", "--out", "o"],
        &[
            "decode",
            "--config",
            "run.toml",
            "--input",
            "o/dataset.ftlog",
            "--calibration",
            "o/calibration.ftcal",
            "--out",
            "o",
        ],
        &[
            "evaluate",
            "--config",
            "run.toml",
            "--input",
            "o/dataset.csv",
            "--calibration",
            "o/calibration.ftcal",
            "--out",
            "o",
        ],
    ];
    for args in steps {
        let out = run_in(tmp.path(), args);
        assert_eq!(out.status.code(), Some(0), "{args:?}: {}", stderr_str(&out));
    }
    // decoded.csv has one row per frame plus a header.
    let decoded = fs::read_to_string(tmp.path().join("o/decoded.csv")).unwrap();
    assert_eq!(decoded.lines().count(), 380 + 1);
    assert!(decoded.starts_with("t_us,fx,fy,fz,tx,ty,tz,extrapolated\n"));
    // The evaluation carries all three sections for this schedule.
    let eval: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("o/evaluation.json")).unwrap())
            .unwrap();
    assert!(eval["resolution"].is_array());
    assert!(eval["quantization_levels"].is_array());
    assert!(eval["crosstalk"].is_array());
}

#[test]
fn decode_rejects_a_calibration_for_a_different_sensor() {
    let tmp = TempDir::new().unwrap();
    write_small_config(tmp.path());
    for args in [
        &["simulate", "--config", "run.toml", "--out", "o"][..],
        &["calibrate", "--config", "run.toml", "--input", "o/dataset.csv", "--out", "o"][..],
    ] {
        assert_eq!(run_in(tmp.path(), args).status.code(), Some(0));
    }
    fs::write(tmp.path().join("other.toml"), "coupling_scale = 0.5\n").unwrap();
    let out = run_in(
        tmp.path(),
        &[
            "decode",
            "--config",
            "other.toml",
            "--input",
            "o/dataset.ftlog",
            "--calibration",
            "o/calibration.ftcal",
            "--out",
            "x",
        ],
    );
    assert_eq!(out.status.code(), Some(2), "{}", stderr_str(&out));
}

#[test]
fn fit_reports_all_families_on_a_generated_curve() {
    let tmp = TempDir::new().unwrap();
    write_small_config(tmp.path());
    assert_eq!(
        run_in(tmp.path(), &["simulate", "--config", "run.toml", "--out", "o"])
            .status
            .code(),
        Some(0)
    );
    let out = run_in(tmp.path(), &["fit", "--input", "o/curve_vertical.csv"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr_str(&out));
    let rows: serde_json::Value = serde_json::from_str(&stdout_str(&out)).unwrap();
    let rows = rows.as_array().unwrap();
    assert_eq!(rows.len(), 4);
    let rational = rows.iter().find(|r| r["model"] == "rational22").unwrap();
    assert!(rational["rmse"].as_f64().unwrap() < 1e-3);

    let single = run_in(
        tmp.path(),
        &["fit", "--input", "o/curve_vertical.csv", "--family", "rational22", "--out", "f"],
    );
    assert_eq!(single.status.code(), Some(0));
    assert!(tmp.path().join("f/fit_rational22.json").is_file());
}

#[test]
fn replay_rate_bounds_are_config_errors() {
    let tmp = TempDir::new().unwrap();
    write_small_config(tmp.path());
    assert_eq!(
        run_in(tmp.path(), &["simulate", "--config", "run.toml", "--out", "o"])
            .status
            .code(),
        Some(0)
    );
    let out = run_in(
        tmp.path(),
        &["replay", "--input", "o/dataset.ftlog", "--rate", "5000"],
    );
    assert_eq!(out.status.code(), Some(2));
    let out = run_in(
        tmp.path(),
        &["replay", "--input", "o/dataset.ftlog", "--rate", "0.5"],
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn report_requires_at_least_one_artifact_and_regenerates_identically() {
    let tmp = TempDir::new().unwrap();
    let none = run_in(tmp.path(), &["report", "--out", "r"]);
    assert_eq!(none.status.code(), Some(2));
    assert!(!stderr_str(&none).is_empty(), "empty report must explain itself");

    let missing = run_in(tmp.path(), &["report", "--eval", "nope.json", "--out", "r"]);
    assert_eq!(missing.status.code(), Some(2));

    write_small_config(tmp.path());
    let steps: [&[&str]; 3] = [
        &["simulate", "--config", "run.toml", "--out", "o"],
        &["calibrate", "--config", "run.toml", "--input", "o/dataset.csv", "--out", "o"],
        &[
            "evaluate",
            "--config",
            "run.toml",
            "--input",
            "o/dataset.csv",
            "--calibration",
            "o/calibration.ftcal",
            "--out",
            "o",
        ],
    ];
    for args in steps {
        assert_eq!(run_in(tmp.path(), args).status.code(), Some(0), "{args:?}");
    }
    for dir in ["r1", "r2"] {
        let out = run_in(
            tmp.path(),
            &[
                "report",
                "--eval",
                "o/evaluation.json",
                "--curve",
                "o/curve_vertical.csv",
                "--out",
                dir,
            ],
        );
        assert_eq!(out.status.code(), Some(0), "{}", stderr_str(&out));
    }
    let names: Vec<String> = fs::read_dir(tmp.path().join("r1"))
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    assert!(names.contains(&"fit_comparison.csv".to_string()));
    assert!(names.contains(&"fullscale_error.csv".to_string()));
    for name in &names {
        let a = fs::read(tmp.path().join("r1").join(name)).unwrap();
        let b = fs::read(tmp.path().join("r2").join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between report regenerations");
    }
    let table = fs::read_to_string(tmp.path().join("r1/fit_comparison.csv")).unwrap();
    assert!(table.starts_with("model,n_params,rmse,r2,linearity_pct\n"));
    assert_eq!(table.lines().count(), 5, "header plus one row per family");
}
