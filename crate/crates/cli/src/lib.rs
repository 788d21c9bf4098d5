//! `kfmi`: simulate trajectories, run the filter over them, and verify the
//! information-theoretic properties of the gain.
//!
//! Exit codes: 0 success, 1 verification failure, 2 usage or validation
//! error, 3 I/O error.

use std::path::Path;

use kalman_mi::information::nats_to_bits;
use kalman_mi::{generate, run_filter};
use thiserror::Error;

pub mod config;
pub mod files;
pub mod verify;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Schema(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Estimation(#[from] kalman_mi::Error),
    #[error("verification failed: {0}")]
    VerificationFailed(String),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::VerificationFailed(_) => 1,
            CliError::Usage(_) | CliError::Config(_) | CliError::Schema(_) => 2,
            CliError::Estimation(_) => 2,
            CliError::Io { .. } => 3,
        }
    }
}

/// Generates a trajectory from the configured scenario.
pub fn cmd_simulate(
    config_path: &Path,
    out_path: &Path,
    seed_override: Option<u64>,
) -> Result<(), CliError> {
    let mut cfg = config::load(config_path)?;
    if let Some(seed) = seed_override {
        cfg.scenario.seed = seed;
    }
    let traj = generate(&cfg.scenario)?;
    files::write_trajectory(out_path, &traj, cfg.scenario.seed)
}

/// Filters a trajectory; writes the trace and its summary file.
pub fn cmd_filter(
    config_path: &Path,
    trajectory_path: &Path,
    out_path: &Path,
) -> Result<files::TraceSummary, CliError> {
    let cfg = config::load(config_path)?;
    let traj = files::read_trajectory(trajectory_path)?;
    let model = &cfg.scenario.model;
    if traj.state_dim() != model.n || traj.measurement_dim() != model.m {
        return Err(CliError::Schema(format!(
            "{}: trajectory has n={}, m={} but config has n={}, m={}",
            trajectory_path.display(),
            traj.state_dim(),
            traj.measurement_dim(),
            model.n,
            model.m
        )));
    }
    let run = run_filter(&cfg.scenario, &traj)?;
    files::write_trace(out_path, &run, model.n, model.m)?;
    let summary = files::TraceSummary {
        steps: run.summary.steps,
        cumulative_mi_nats: run.summary.cumulative_mi_nats,
        cumulative_mi_bits: nats_to_bits(run.summary.cumulative_mi_nats),
        mean_nees: run.summary.mean_nees,
    };
    files::write_json(&files::summary_path(out_path), &summary)?;
    Ok(summary)
}

/// Runs the suite and writes the report. A failing check is not an error
/// here; see [`verification_outcome`].
pub fn cmd_verify(
    trials: usize,
    seed: u64,
    tolerance_overrides: &[String],
    report_path: &Path,
    parallel: bool,
) -> Result<verify::VerificationReport, CliError> {
    let overrides = verify::parse_overrides(tolerance_overrides)?;
    let report = verify::run_suite(trials, seed, &overrides, parallel)?;
    files::write_json(report_path, &report)?;
    Ok(report)
}

/// `VerificationFailed` naming the failed checks, if any.
pub fn verification_outcome(report: &verify::VerificationReport) -> Result<(), CliError> {
    if report.overall_passed {
        return Ok(());
    }
    let failed: Vec<&str> = report
        .checks
        .iter()
        .filter(|c| !c.passed)
        .map(|c| c.check_name.as_str())
        .collect();
    Err(CliError::VerificationFailed(failed.join(", ")))
}
