use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use kalman_mi_cli::files::TraceSummary;
use kalman_mi_cli::verify::{VerificationReport, CHECKS};

fn kfmi(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kfmi"))
        .args(args)
        .current_dir(cwd)
        .output()
        .unwrap()
}

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name)
}

fn read_trace(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(|v| v.parse().unwrap()).collect())
        .collect();
    (header, rows)
}

fn column(header: &[String], rows: &[Vec<f64>], name: &str) -> Vec<f64> {
    let i = header.iter().position(|h| h == name).unwrap();
    rows.iter().map(|r| r[i]).collect()
}

const SCALAR: &str = "n = 1
m = 1
l = 1
steps = 5
seed = 1
Phi = [[1.0]]
Gamma = [[1.0]]
H = [[1.0]]
Q = [[0.0]]
R = [[1.0]]

[initial_belief]
mean = [0.0]
cov = [[1.0]]

[initial_truth]
mean = [0.0]
cov = [[0.0]]
";

#[test]
fn simulate_then_filter_two_state() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("two_state.toml");
    let cfg = cfg.to_str().unwrap();
    let out = kfmi(
        &["simulate", "--config", cfg, "--out", "traj.csv"],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let out = kfmi(
        &[
            "filter",
            "--config",
            cfg,
            "--trajectory",
            "traj.csv",
            "--out",
            "trace.csv",
        ],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );

    let (header, rows) = read_trace(&dir.path().join("trace.csv"));
    assert_eq!(rows.len(), 1000);
    assert_eq!(header.len(), 1 + 1 + 2 + 4 + 1 + 3);

    let mi = column(&header, &rows, "mi_nats");
    let cum = column(&header, &rows, "cum_mi_nats");
    let total: f64 = mi.iter().sum();
    assert!((total - cum[cum.len() - 1]).abs() <= 1e-9);
    assert!(mi.iter().all(|&v| v >= 0.0));

    let summary: TraceSummary = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("trace.summary.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(summary.steps, 1000);
    assert!((summary.cumulative_mi_nats - total).abs() <= 1e-9);
    assert!((summary.cumulative_mi_bits - total / std::f64::consts::LN_2).abs() <= 1e-9);
}

#[test]
fn simulate_is_reproducible_and_seed_overridable() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("two_state.toml");
    let cfg = cfg.to_str().unwrap();
    for (out, extra) in [("a.csv", None), ("b.csv", None), ("c.csv", Some("8"))] {
        let mut args = vec!["simulate", "--config", cfg, "--out", out];
        if let Some(s) = extra {
            args.extend(["--seed", s]);
        }
        assert!(kfmi(&args, dir.path()).status.success());
    }
    let read = |f: &str| std::fs::read_to_string(dir.path().join(f)).unwrap();
    assert_eq!(read("a.csv"), read("b.csv"));
    assert_ne!(read("a.csv"), read("c.csv"));
    assert!(read("c.csv").contains("# seed: 8"));
}

#[test]
fn noiseless_trajectory_gives_zero_nees() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("cfg.toml"), SCALAR).unwrap();
    let mut traj = String::from("k,x_1,z_1\n0,0.0,\n");
    for k in 1..=5 {
        traj.push_str(&format!("{k},0.0,0.0\n"));
    }
    std::fs::write(dir.path().join("traj.csv"), traj).unwrap();
    let out = kfmi(
        &[
            "filter",
            "--config",
            "cfg.toml",
            "--trajectory",
            "traj.csv",
            "--out",
            "trace.csv",
        ],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let (header, rows) = read_trace(&dir.path().join("trace.csv"));
    assert_eq!(rows.len(), 5);
    assert!(column(&header, &rows, "nees").iter().all(|&v| v == 0.0));
    // variance after k unit-noise looks at a constant: 1 / (1 + k)
    for (k, v) in column(&header, &rows, "sigma_11").iter().enumerate() {
        assert!((v - 1.0 / (k as f64 + 2.0)).abs() < 1e-14);
    }
}

#[test]
fn singular_r_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("cfg.toml"),
        SCALAR.replace("R = [[1.0]]", "R = [[0]]"),
    )
    .unwrap();
    let out = kfmi(
        &["simulate", "--config", "cfg.toml", "--out", "t.csv"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("R not positive definite"), "{err}");
    assert!(err.contains("cfg.toml:10:"), "{err}");
}

#[test]
fn dimension_mismatch_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let two = config("two_state.toml");
    let scalar = config("scalar_golden.toml");
    let out = kfmi(
        &[
            "simulate",
            "--config",
            two.to_str().unwrap(),
            "--out",
            "traj.csv",
        ],
        dir.path(),
    );
    assert!(out.status.success());
    let out = kfmi(
        &[
            "filter",
            "--config",
            scalar.to_str().unwrap(),
            "--trajectory",
            "traj.csv",
            "--out",
            "trace.csv",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(!dir.path().join("trace.csv").exists());
}

#[test]
fn malformed_trajectory_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("cfg.toml"), SCALAR).unwrap();
    for body in [
        "k,x_1,z_1\n0,0.0,\n2,1.0,1.0\n",
        "k,a,b\n0,0,\n",
        "k,x_1,z_1\n0,0.0,\n1,x,1\n",
    ] {
        std::fs::write(dir.path().join("traj.csv"), body).unwrap();
        let out = kfmi(
            &[
                "filter",
                "--config",
                "cfg.toml",
                "--trajectory",
                "traj.csv",
                "--out",
                "o.csv",
            ],
            dir.path(),
        );
        assert_eq!(out.status.code(), Some(2), "{body}");
    }
}

#[test]
fn missing_files_are_io_errors() {
    let dir = tempfile::tempdir().unwrap();
    let out = kfmi(
        &["simulate", "--config", "nope.toml", "--out", "t.csv"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(3));
    std::fs::write(dir.path().join("cfg.toml"), SCALAR).unwrap();
    let out = kfmi(
        &[
            "filter",
            "--config",
            "cfg.toml",
            "--trajectory",
            "nope.csv",
            "--out",
            "o.csv",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("cfg.toml"),
        format!("{SCALAR}\n[extra]\nx = 1\n"),
    )
    .unwrap();
    let out = kfmi(
        &["simulate", "--config", "cfg.toml", "--out", "t.csv"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn verify_report_schema_and_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = kfmi(&["verify", "--trials", "5", "--seed", "3"], dir.path());
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );

    let text = std::fs::read_to_string(dir.path().join("verify_report.json")).unwrap();
    let raw: serde_json::Value = serde_json::from_str(&text).unwrap();
    for key in ["checks", "overall_passed", "metadata"] {
        assert!(raw.get(key).is_some(), "{key}");
    }
    for key in ["seed", "build", "timestamp", "generator"] {
        assert!(raw["metadata"].get(key).is_some(), "{key}");
    }
    let report: VerificationReport = serde_json::from_str(&text).unwrap();
    assert_eq!(report.metadata.seed, 3);
    for (name, tol) in CHECKS {
        let hits: Vec<_> = report
            .checks
            .iter()
            .filter(|c| c.check_name == name)
            .collect();
        assert_eq!(hits.len(), 1, "{name}");
        assert_eq!(hits[0].tolerance, tol);
        assert_eq!(hits[0].instances_run, 5);
    }

    let out = kfmi(
        &[
            "verify",
            "--trials",
            "5",
            "--tol",
            "gain_equivalence=1e-30",
            "--report",
            "r.json",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1));
    let report: VerificationReport =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("r.json")).unwrap()).unwrap();
    assert!(!report.overall_passed);
    let gain = report
        .checks
        .iter()
        .find(|c| c.check_name == "gain_equivalence")
        .unwrap();
    assert!(!gain.passed);

    for bad in [
        vec!["verify", "--trials", "0"],
        vec!["verify", "--tol", "no_such_check=1"],
        vec!["verify", "--tol", "schur_identity"],
        vec!["frobnicate"],
    ] {
        assert_eq!(kfmi(&bad, dir.path()).status.code(), Some(2), "{bad:?}");
    }
}

#[test]
fn parallel_verify_matches_sequential() {
    let dir = tempfile::tempdir().unwrap();
    let a = kfmi(
        &["verify", "--trials", "4", "--report", "a.json"],
        dir.path(),
    );
    let b = kfmi(
        &[
            "verify",
            "--trials",
            "4",
            "--report",
            "b.json",
            "--parallel",
        ],
        dir.path(),
    );
    assert!(a.status.success() && b.status.success());
    let load = |f: &str| -> VerificationReport {
        serde_json::from_str(&std::fs::read_to_string(dir.path().join(f)).unwrap()).unwrap()
    };
    assert_eq!(load("a.json").checks, load("b.json").checks);
}
