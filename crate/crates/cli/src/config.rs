//! Scenario configuration files (TOML).
//!
//! ```toml
//! n = 1
//! m = 1
//! l = 1
//! steps = 50
//! seed = 7
//! Phi = [[1.0]]
//! Gamma = [[1.0]]
//! H = [[1.0]]
//! Q = [[1.0]]
//! R = [[1.0]]
//!
//! [initial_belief]
//! mean = [0.0]
//! cov = [[1.0]]
//!
//! [initial_truth]
//! mean = [0.0]
//! cov = [[1.0]]
//! ```

use std::path::Path;

use kalman_mi::linops::matrix_from_rows;
use kalman_mi::nalgebra::{DMatrix, DVector};
use kalman_mi::{GaussianBelief, Scenario, StateSpaceModel, SymMatrix};
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianSpec {
    pub mean: Vec<f64>,
    pub cov: Vec<Vec<f64>>,
}

/// Raw configuration document; row-major nested arrays.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub n: usize,
    pub m: usize,
    pub l: usize,
    #[serde(rename = "Phi")]
    pub phi: Vec<Vec<f64>>,
    #[serde(rename = "Gamma")]
    pub gamma: Vec<Vec<f64>>,
    #[serde(rename = "H")]
    pub h: Vec<Vec<f64>>,
    #[serde(rename = "Q")]
    pub q: Vec<Vec<f64>>,
    #[serde(rename = "R")]
    pub r: Vec<Vec<f64>>,
    pub initial_belief: GaussianSpec,
    pub initial_truth: GaussianSpec,
    pub steps: usize,
    pub seed: u64,
}

/// A parsed and validated configuration.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub raw: ScenarioConfig,
    pub scenario: Scenario,
}

pub fn load(path: &Path) -> Result<LoadedConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse(&text, &path.display().to_string())
}

/// Parses and validates; `origin` prefixes error messages.
pub fn parse(text: &str, origin: &str) -> Result<LoadedConfig, CliError> {
    let raw: ScenarioConfig = toml::from_str(text)
        .map_err(|e| CliError::Config(format!("{origin}: {}", e.to_string().trim_end())))?;
    let at = |key: &str, msg: String| -> CliError {
        match key_line(text, key) {
            Some(line) => CliError::Config(format!("{origin}:{line}: {msg}")),
            None => CliError::Config(format!("{origin}: {msg}")),
        }
    };

    let matrix = |key: &str, rows: &[Vec<f64>]| -> Result<DMatrix<f64>, CliError> {
        let slices: Vec<&[f64]> = rows.iter().map(Vec::as_slice).collect();
        if slices.is_empty() || slices[0].is_empty() {
            return Err(at(key, format!("{key} must be a non-empty matrix")));
        }
        matrix_from_rows(&slices).map_err(|e| at(key, format!("{key}: {e}")))
    };
    let symmetric = |key: &str, rows: &[Vec<f64>]| -> Result<SymMatrix, CliError> {
        SymMatrix::new(matrix(key, rows)?).map_err(|e| at(key, format!("{key}: {e}")))
    };

    let model = StateSpaceModel {
        n: raw.n,
        m: raw.m,
        l: raw.l,
        phi: matrix("Phi", &raw.phi)?,
        gamma: matrix("Gamma", &raw.gamma)?,
        h: matrix("H", &raw.h)?,
        q: symmetric("Q", &raw.q)?,
        r: symmetric("R", &raw.r)?,
    };
    if let Err(violations) = model.validate() {
        let first = &violations[0];
        let all: Vec<String> = violations.iter().map(ToString::to_string).collect();
        return Err(at(first.field, all.join("; ")));
    }

    let belief_cov = symmetric("initial_belief", &raw.initial_belief.cov)?;
    let belief = GaussianBelief::new(
        DVector::from_vec(raw.initial_belief.mean.clone()),
        belief_cov,
    )
    .map_err(|e| at("initial_belief", format!("initial_belief: {e}")))?;
    let truth_cov = symmetric("initial_truth", &raw.initial_truth.cov)?;
    let scenario = Scenario::new(
        model,
        DVector::from_vec(raw.initial_truth.mean.clone()),
        truth_cov,
        belief,
        raw.steps,
        raw.seed,
    )
    .map_err(|e| at("initial_truth", e.to_string()))?;
    Ok(LoadedConfig { raw, scenario })
}

/// 1-based line of the first `key = ...` or `[key]` line.
fn key_line(text: &str, key: &str) -> Option<usize> {
    text.lines()
        .position(|line| {
            let t = line.trim_start();
            t.strip_prefix(key)
                .is_some_and(|rest| rest.trim_start().starts_with('='))
                || t == format!("[{key}]")
        })
        .map(|i| i + 1)
}
