//! Trajectory and trace files (comma-separated, header row).
//!
//! Trajectory: `k, x_1..x_n, z_1..z_m`; row `k = 0` holds the initial truth
//! and empty measurement cells. Leading `#` lines carry generator metadata.
//!
//! Trace: `k, z_1..z_m, xhat_1..xhat_n, sigma_11..sigma_nn, innovation_1..innovation_m,
//! mi_nats, cum_mi_nats, nees`, with the posterior covariance row-major.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use kalman_mi::nalgebra::DVector;
use kalman_mi::rng::GENERATOR_NAME;
use kalman_mi::{FilterRun, Trajectory};
use serde::Serialize;

use crate::CliError;

fn numbered(prefix: &str, count: usize) -> impl Iterator<Item = String> + '_ {
    (1..=count).map(move |i| format!("{prefix}_{i}"))
}

fn csv_err(path: &Path, e: csv::Error) -> CliError {
    if e.is_io_error() {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => CliError::io(path, io),
            _ => unreachable!(),
        }
    } else {
        CliError::Schema(format!("{}: {e}", path.display()))
    }
}

pub fn write_trajectory(path: &Path, traj: &Trajectory, seed: u64) -> Result<(), CliError> {
    let mut file = File::create(path).map_err(|e| CliError::io(path, e))?;
    writeln!(file, "# generator: {GENERATOR_NAME}").map_err(|e| CliError::io(path, e))?;
    writeln!(file, "# seed: {seed}").map_err(|e| CliError::io(path, e))?;
    let mut w = csv::Writer::from_writer(file);
    let (n, m) = (traj.state_dim(), traj.measurement_dim());
    let header: Vec<String> = std::iter::once("k".to_string())
        .chain(numbered("x", n))
        .chain(numbered("z", m))
        .collect();
    w.write_record(&header).map_err(|e| csv_err(path, e))?;
    for (k, x) in traj.truths().iter().enumerate() {
        let mut row = vec![k.to_string()];
        row.extend(x.iter().map(f64::to_string));
        match k.checked_sub(1).map(|i| &traj.measurements()[i]) {
            Some(z) => row.extend(z.iter().map(f64::to_string)),
            None => row.extend(std::iter::repeat_n(String::new(), m)),
        }
        w.write_record(&row).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn read_trajectory(path: &Path) -> Result<Trajectory, CliError> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(file);
    let schema = |msg: String| CliError::Schema(format!("{}: {msg}", path.display()));

    let header = r.headers().map_err(|e| csv_err(path, e))?.clone();
    let n = header.iter().filter(|h| h.starts_with("x_")).count();
    let m = header.iter().filter(|h| h.starts_with("z_")).count();
    let expected: Vec<String> = std::iter::once("k".to_string())
        .chain(numbered("x", n))
        .chain(numbered("z", m))
        .collect();
    if n == 0 || m == 0 || header.iter().ne(expected.iter().map(String::as_str)) {
        return Err(schema(format!(
            "header must be k, x_1..x_n, z_1..z_m; got {}",
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }

    let mut truths = Vec::new();
    let mut measurements = Vec::new();
    for (row_idx, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let line = rec.position().map_or(0, |p| p.line());
        let parse = |s: &str| -> Result<f64, CliError> {
            s.trim()
                .parse::<f64>()
                .map_err(|_| schema(format!("line {line}: bad number {s:?}")))
        };
        let k: usize = rec[0]
            .trim()
            .parse()
            .map_err(|_| schema(format!("line {line}: bad step {:?}", &rec[0])))?;
        if k != row_idx {
            return Err(schema(format!(
                "line {line}: expected k = {row_idx}, got {k}"
            )));
        }
        let x: Vec<f64> = (1..=n).map(|i| parse(&rec[i])).collect::<Result<_, _>>()?;
        truths.push(DVector::from_vec(x));
        if k == 0 {
            if (n + 1..=n + m).any(|i| !rec[i].trim().is_empty()) {
                return Err(schema(format!(
                    "line {line}: row k = 0 carries no measurement"
                )));
            }
        } else {
            let z: Vec<f64> = (n + 1..=n + m)
                .map(|i| parse(&rec[i]))
                .collect::<Result<_, _>>()?;
            measurements.push(DVector::from_vec(z));
        }
    }
    Trajectory::new(truths, measurements).map_err(|e| schema(e.to_string()))
}

pub fn trace_header(n: usize, m: usize) -> Vec<String> {
    let mut h = vec!["k".to_string()];
    h.extend(numbered("z", m));
    h.extend(numbered("xhat", n));
    for i in 1..=n {
        for j in 1..=n {
            h.push(format!("sigma_{i}{j}"));
        }
    }
    h.extend(numbered("innovation", m));
    h.extend(["mi_nats", "cum_mi_nats", "nees"].map(String::from));
    h
}

pub fn write_trace(path: &Path, run: &FilterRun, n: usize, m: usize) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(trace_header(n, m))
        .map_err(|e| csv_err(path, e))?;
    for ((rec, cum), nees) in run
        .records
        .iter()
        .zip(&run.cumulative_mi_nats)
        .zip(&run.nees)
    {
        let mut row = vec![rec.step.to_string()];
        row.extend(rec.measurement.iter().map(f64::to_string));
        row.extend(rec.posterior.mean().iter().map(f64::to_string));
        let cov = rec.posterior.cov().as_matrix();
        for i in 0..n {
            for j in 0..n {
                row.push(cov[(i, j)].to_string());
            }
        }
        row.extend(rec.innovation.iter().map(f64::to_string));
        row.push(rec.mi_nats.to_string());
        row.push(cum.to_string());
        row.push(nees.to_string());
        w.write_record(&row).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// Written next to the trace as `<trace stem>.summary.json`.
#[derive(Debug, Clone, Serialize, serde::Deserialize, PartialEq)]
pub struct TraceSummary {
    pub steps: usize,
    pub cumulative_mi_nats: f64,
    pub cumulative_mi_bits: f64,
    pub mean_nees: f64,
}

pub fn summary_path(trace: &Path) -> std::path::PathBuf {
    let stem = trace
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "trace".into());
    trace.with_file_name(format!("{stem}.summary.json"))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("plain data serializes");
    text.push('\n');
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}
