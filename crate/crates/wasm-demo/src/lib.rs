//! Browser bindings for the scalar demo page in `www/`.
//!
//! Each exported function takes plain numbers and returns a JSON string. The
//! `*_json` functions hold the logic and are usable (and tested) natively.

use kalman_mi::nalgebra::{DMatrix, DVector};
use kalman_mi::{
    generate, maximize_mi, mi_of_gain, run_filter, GainMatrix, GaussianBelief, MiObjective,
    OptimizerSettings, Scenario, StateSpaceModel, StepRule, SymMatrix,
};
use serde::Serialize;
use wasm_bindgen::prelude::*;

type DemoResult<T> = Result<T, String>;

fn scalar_objective(sigma: f64, h: f64, r: f64) -> DemoResult<MiObjective> {
    MiObjective::new(
        SymMatrix::from_diagonal(&[sigma]),
        DMatrix::from_element(1, 1, h),
        SymMatrix::from_diagonal(&[r]),
    )
    .map_err(|e| e.to_string())
}

fn scalar_gain(k: f64) -> DemoResult<GainMatrix> {
    GainMatrix::new(DMatrix::from_element(1, 1, k)).map_err(|e| e.to_string())
}

#[derive(Debug, Serialize)]
pub struct MiCurve {
    pub gains: Vec<f64>,
    pub mi_nats: Vec<f64>,
    pub optimal_gain: f64,
    pub optimal_mi_nats: f64,
}

/// MI of the update as a function of a scalar gain on `[k_min, k_max]`.
pub fn mi_curve(
    sigma: f64,
    h: f64,
    r: f64,
    k_min: f64,
    k_max: f64,
    points: usize,
) -> DemoResult<MiCurve> {
    if !(k_min < k_max) || points < 2 {
        return Err("need k_min < k_max and at least 2 points".into());
    }
    let obj = scalar_objective(sigma, h, r)?;
    let optimal = obj.closed_form_gain();
    let mut gains = Vec::with_capacity(points);
    let mut mi_nats = Vec::with_capacity(points);
    for i in 0..points {
        let k = k_min + (k_max - k_min) * i as f64 / (points - 1) as f64;
        gains.push(k);
        mi_nats.push(mi_of_gain(&obj, &scalar_gain(k)?).map_err(|e| e.to_string())?);
    }
    Ok(MiCurve {
        gains,
        mi_nats,
        optimal_gain: optimal.as_matrix()[(0, 0)],
        optimal_mi_nats: mi_of_gain(&obj, &optimal).map_err(|e| e.to_string())?,
    })
}

#[derive(Debug, Serialize)]
pub struct AscentTrace {
    pub iterations: usize,
    pub converged: bool,
    pub final_gain: f64,
    pub optimal_gain: f64,
    pub mi_nats: Vec<f64>,
    pub gradient_norm: Vec<f64>,
}

/// Gradient ascent on the scalar gain from `k0`. Non-convergence within
/// `max_iterations` is reported in the result, not as an error.
pub fn ascent(
    sigma: f64,
    h: f64,
    r: f64,
    k0: f64,
    max_iterations: usize,
    barzilai_borwein: bool,
) -> DemoResult<AscentTrace> {
    let obj = scalar_objective(sigma, h, r)?;
    let settings = OptimizerSettings {
        max_iterations,
        step_rule: if barzilai_borwein {
            StepRule::BarzilaiBorwein
        } else {
            StepRule::Fixed
        },
        ..OptimizerSettings::default()
    };
    let trace = match maximize_mi(&obj, &scalar_gain(k0)?, &settings) {
        Ok(t) => t,
        Err(kalman_mi::Error::DidNotConverge(t)) => *t,
        Err(e) => return Err(e.to_string()),
    };
    Ok(AscentTrace {
        iterations: trace.iterations,
        converged: trace.converged,
        final_gain: trace.final_gain.as_matrix()[(0, 0)],
        optimal_gain: obj.closed_form_gain().as_matrix()[(0, 0)],
        mi_nats: trace.per_iteration.iter().map(|p| p.0).collect(),
        gradient_norm: trace.per_iteration.iter().map(|p| p.1).collect(),
    })
}

#[derive(Debug, Serialize)]
pub struct ScalarRun {
    pub truth: Vec<f64>,
    pub measurements: Vec<f64>,
    pub estimates: Vec<f64>,
    pub std_devs: Vec<f64>,
    pub mi_nats: Vec<f64>,
    pub cumulative_mi_nats: f64,
    pub mean_nees: f64,
}

/// Simulates and filters `x' = φx + w`, `z = hx + v`, starting from
/// `x₀ ~ N(0, p0)` with the filter initialised at `N(0, p0)`.
pub fn scalar_filter(
    phi: f64,
    q: f64,
    h: f64,
    r: f64,
    p0: f64,
    steps: usize,
    seed: u64,
) -> DemoResult<ScalarRun> {
    let one = |v: f64| DMatrix::from_element(1, 1, v);
    let err = |e: kalman_mi::Error| e.to_string();
    let model = StateSpaceModel::new(
        one(phi),
        one(1.0),
        one(h),
        SymMatrix::from_diagonal(&[q]),
        SymMatrix::from_diagonal(&[r]),
    )
    .map_err(err)?;
    let belief =
        GaussianBelief::new(DVector::zeros(1), SymMatrix::from_diagonal(&[p0])).map_err(err)?;
    let scenario = Scenario::new(
        model,
        DVector::zeros(1),
        SymMatrix::from_diagonal(&[p0]),
        belief,
        steps,
        seed,
    )
    .map_err(err)?;
    let traj = generate(&scenario).map_err(err)?;
    let run = run_filter(&scenario, &traj).map_err(err)?;
    Ok(ScalarRun {
        truth: traj.truths()[1..].iter().map(|x| x[0]).collect(),
        measurements: traj.measurements().iter().map(|z| z[0]).collect(),
        estimates: run.records.iter().map(|r| r.posterior.mean()[0]).collect(),
        std_devs: run
            .records
            .iter()
            .map(|r| r.posterior.cov()[(0, 0)].sqrt())
            .collect(),
        mi_nats: run.records.iter().map(|r| r.mi_nats).collect(),
        cumulative_mi_nats: run.summary.cumulative_mi_nats,
        mean_nees: run.summary.mean_nees,
    })
}

fn to_json<T: Serialize>(r: DemoResult<T>) -> DemoResult<String> {
    r.map(|v| serde_json::to_string(&v).expect("plain data serializes"))
}

pub fn mi_curve_json(
    sigma: f64,
    h: f64,
    r: f64,
    k_min: f64,
    k_max: f64,
    points: usize,
) -> DemoResult<String> {
    to_json(mi_curve(sigma, h, r, k_min, k_max, points))
}

pub fn ascent_json(
    sigma: f64,
    h: f64,
    r: f64,
    k0: f64,
    max_iterations: usize,
    barzilai_borwein: bool,
) -> DemoResult<String> {
    to_json(ascent(sigma, h, r, k0, max_iterations, barzilai_borwein))
}

pub fn scalar_filter_json(
    phi: f64,
    q: f64,
    h: f64,
    r: f64,
    p0: f64,
    steps: usize,
    seed: u64,
) -> DemoResult<String> {
    to_json(scalar_filter(phi, q, h, r, p0, steps, seed))
}

#[wasm_bindgen(js_name = miCurve)]
pub fn js_mi_curve(
    sigma: f64,
    h: f64,
    r: f64,
    k_min: f64,
    k_max: f64,
    points: usize,
) -> Result<String, JsError> {
    mi_curve_json(sigma, h, r, k_min, k_max, points).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = ascent)]
pub fn js_ascent(
    sigma: f64,
    h: f64,
    r: f64,
    k0: f64,
    max_iterations: usize,
    barzilai_borwein: bool,
) -> Result<String, JsError> {
    ascent_json(sigma, h, r, k0, max_iterations, barzilai_borwein).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = scalarFilter)]
pub fn js_scalar_filter(
    phi: f64,
    q: f64,
    h: f64,
    r: f64,
    p0: f64,
    steps: usize,
    seed: u64,
) -> Result<String, JsError> {
    scalar_filter_json(phi, q, h, r, p0, steps, seed).map_err(|e| JsError::new(&e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn curve_peaks_at_optimal_gain() {
        let c = mi_curve(1.0, 1.0, 1.0, -1.0, 2.0, 301).unwrap();
        assert!((c.optimal_gain - 0.5).abs() < 1e-15);
        assert!((c.optimal_mi_nats - 0.5 * std::f64::consts::LN_2).abs() < 1e-15);
        assert!(c.mi_nats.iter().all(|&v| v <= c.optimal_mi_nats + 1e-15));
        let best = c
            .mi_nats
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap()
            .0;
        assert!((c.gains[best] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn curve_rejects_bad_range() {
        assert!(mi_curve(1.0, 1.0, 1.0, 1.0, 1.0, 10).is_err());
        assert!(mi_curve(1.0, 1.0, 1.0, 0.0, 1.0, 1).is_err());
        assert!(mi_curve(-1.0, 1.0, 1.0, 0.0, 1.0, 10).is_err());
    }

    #[test]
    fn ascent_reaches_optimum() {
        for bb in [true, false] {
            let t = ascent(2.0, 0.7, 0.3, 0.0, 10_000, bb).unwrap();
            assert!(t.converged);
            assert!((t.final_gain - t.optimal_gain).abs() <= 1e-9 * t.optimal_gain.abs());
            assert!(t.mi_nats.windows(2).all(|w| w[1] >= w[0]));
            assert_eq!(t.mi_nats.len(), t.iterations + 1);
        }
    }

    #[test]
    fn truncated_ascent_is_reported() {
        let t = ascent(50.0, 3.0, 0.01, -5.0, 2, false).unwrap();
        assert!(!t.converged);
        assert_eq!(t.iterations, 2);
    }

    #[test]
    fn scalar_filter_shapes_and_variance() {
        let run = scalar_filter(0.9, 0.1, 1.0, 0.5, 1.0, 200, 3).unwrap();
        for v in [
            &run.truth,
            &run.measurements,
            &run.estimates,
            &run.std_devs,
            &run.mi_nats,
        ] {
            assert_eq!(v.len(), 200);
        }
        // steady-state variance: fixed point of p = ((φ²p + q)⁻¹ + h²/r)⁻¹
        let mut p = 1.0;
        for _ in 0..1000 {
            let pred: f64 = 0.81 * p + 0.1;
            p = 1.0 / (1.0 / pred + 1.0 / 0.5);
        }
        assert!((run.std_devs[199] - p.sqrt()).abs() < 1e-12);
        let total: f64 = run.mi_nats.iter().sum();
        assert!((total - run.cumulative_mi_nats).abs() < 1e-9);
    }

    #[test]
    fn json_round_trips_and_errors_are_messages() {
        let text = scalar_filter_json(1.0, 0.0, 1.0, 1.0, 1.0, 3, 0).unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["estimates"].as_array().unwrap().len(), 3);
        let e = scalar_filter_json(1.0, 0.0, 1.0, 0.0, 1.0, 3, 0).unwrap_err();
        assert!(e.contains("R"), "{e}");
        assert!(ascent_json(1.0, 1.0, 1.0, 0.0, 10, true).is_ok());
        assert!(mi_curve_json(1.0, 1.0, 1.0, 0.0, 1.0, 5).is_ok());
    }
}
