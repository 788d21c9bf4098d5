//! Seeded ground-truth trajectories and the filter run over them.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::filter::{update_optimal, UpdateRecord};
use crate::linops::{psd_factor, SymMatrix};
use crate::model::{check_model, predict, GaussianBelief, StateSpaceModel};
use crate::rng::{streams, GaussianStream};

/// A model plus initial conditions, run length and seed.
///
/// `model.R` may be merely semidefinite here so that noiseless measurements
/// can be generated; [`run_filter`] requires it to be definite.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub model: StateSpaceModel,
    pub initial_truth_mean: DVector<f64>,
    /// Semidefinite; all-zero means the truth starts exactly at the mean.
    pub initial_truth_cov: SymMatrix,
    pub initial_belief: GaussianBelief,
    pub steps: usize,
    pub seed: u64,
}

impl Scenario {
    pub fn new(
        model: StateSpaceModel,
        initial_truth_mean: DVector<f64>,
        initial_truth_cov: SymMatrix,
        initial_belief: GaussianBelief,
        steps: usize,
        seed: u64,
    ) -> Result<Self> {
        let s = Scenario {
            model,
            initial_truth_mean,
            initial_truth_cov,
            initial_belief,
            steps,
            seed,
        };
        s.check()?;
        Ok(s)
    }

    fn check(&self) -> Result<()> {
        self.model
            .validate_for_generation()
            .map_err(Error::InvalidModel)?;
        let n = self.model.n;
        if self.steps == 0 {
            return Err(Error::InvalidScenario("steps must be at least 1".into()));
        }
        if self.initial_truth_mean.len() != n || self.initial_truth_cov.dim() != n {
            return Err(Error::InvalidScenario(format!(
                "initial truth must have dimension n = {n}"
            )));
        }
        if self.initial_belief.dim() != n {
            return Err(Error::InvalidScenario(format!(
                "initial belief must have dimension n = {n}"
            )));
        }
        if self.initial_truth_mean.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidScenario(
                "initial truth mean has non-finite entries".into(),
            ));
        }
        psd_factor(&self.initial_truth_cov)?;
        Ok(())
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Scenario {
            seed,
            ..self.clone()
        }
    }
}

/// Truth states `x_0..x_T` and measurements `z_1..z_T`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    truths: Vec<DVector<f64>>,
    measurements: Vec<DVector<f64>>,
}

impl Trajectory {
    pub fn new(truths: Vec<DVector<f64>>, measurements: Vec<DVector<f64>>) -> Result<Self> {
        if measurements.is_empty() || truths.len() != measurements.len() + 1 {
            return Err(Error::InvalidScenario(format!(
                "trajectory needs steps+1 truths for steps >= 1 measurements, got {} and {}",
                truths.len(),
                measurements.len()
            )));
        }
        let n = truths[0].len();
        let m = measurements[0].len();
        if truths.iter().any(|x| x.len() != n) || measurements.iter().any(|z| z.len() != m) {
            return Err(Error::InvalidScenario("ragged trajectory rows".into()));
        }
        if truths
            .iter()
            .chain(measurements.iter())
            .any(|v| v.iter().any(|x| !x.is_finite()))
        {
            return Err(Error::InvalidScenario(
                "trajectory has non-finite entries".into(),
            ));
        }
        Ok(Trajectory {
            truths,
            measurements,
        })
    }

    pub fn truths(&self) -> &[DVector<f64>] {
        &self.truths
    }

    pub fn measurements(&self) -> &[DVector<f64>] {
        &self.measurements
    }

    pub fn steps(&self) -> usize {
        self.measurements.len()
    }

    pub fn state_dim(&self) -> usize {
        self.truths[0].len()
    }

    pub fn measurement_dim(&self) -> usize {
        self.measurements[0].len()
    }
}

fn draw(stream: &mut GaussianStream, factor: &DMatrix<f64>) -> DVector<f64> {
    factor * DVector::from_vec(stream.normals(factor.ncols()))
}

/// Runs the state recurrence with independent process and measurement
/// noise substreams.
pub fn generate(scenario: &Scenario) -> Result<Trajectory> {
    scenario.check()?;
    let model = &scenario.model;
    let seed = scenario.seed;

    let noise_factor = &model.gamma * psd_factor(&model.q)?;
    let meas_factor = psd_factor(&model.r)?;

    let mut x = if scenario
        .initial_truth_cov
        .as_matrix()
        .iter()
        .all(|&v| v == 0.0)
    {
        scenario.initial_truth_mean.clone()
    } else {
        let l0 = psd_factor(&scenario.initial_truth_cov)?;
        let mut init = GaussianStream::new(seed, streams::INITIAL_STATE);
        &scenario.initial_truth_mean + draw(&mut init, &l0)
    };
    let mut process = GaussianStream::new(seed, streams::PROCESS_NOISE);
    let mut measure = GaussianStream::new(seed, streams::MEASUREMENT_NOISE);

    let mut truths = Vec::with_capacity(scenario.steps + 1);
    let mut measurements = Vec::with_capacity(scenario.steps);
    truths.push(x.clone());
    for _ in 0..scenario.steps {
        x = &model.phi * &x + draw(&mut process, &noise_factor);
        let z = &model.h * &x + draw(&mut measure, &meas_factor);
        truths.push(x.clone());
        measurements.push(z);
    }
    Trajectory::new(truths, measurements)
}

/// Aggregate results of a filter run.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterSummary {
    pub steps: usize,
    pub cumulative_mi_nats: f64,
    pub mean_nees: f64,
}

/// Per-step update records with running MI and NEES.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterRun {
    pub records: Vec<UpdateRecord>,
    /// Running sum of `mi_nats` through each step.
    pub cumulative_mi_nats: Vec<f64>,
    /// `(x̂ − x)ᵀ Σ⁻¹ (x̂ − x)` against the posterior at each step.
    pub nees: Vec<f64>,
    pub summary: FilterSummary,
}

/// Predict/update over every measurement of `trajectory`.
pub fn run_filter(scenario: &Scenario, trajectory: &Trajectory) -> Result<FilterRun> {
    let model = &scenario.model;
    check_model(model)?;
    if trajectory.state_dim() != model.n || trajectory.measurement_dim() != model.m {
        return Err(Error::DimensionMismatch {
            what: "trajectory vs model",
            expected: format!("n={}, m={}", model.n, model.m),
            actual: format!(
                "n={}, m={}",
                trajectory.state_dim(),
                trajectory.measurement_dim()
            ),
        });
    }

    let steps = trajectory.steps();
    let mut belief = scenario.initial_belief.clone();
    let mut records = Vec::with_capacity(steps);
    let mut cumulative = Vec::with_capacity(steps);
    let mut nees = Vec::with_capacity(steps);
    let mut total_mi = 0.0;
    for (k, (z, truth)) in trajectory
        .measurements()
        .iter()
        .zip(&trajectory.truths()[1..])
        .enumerate()
    {
        let prior = predict(&belief, model)?;
        let mut rec = update_optimal(&prior, z, model)?;
        rec.step = k + 1;
        total_mi += rec.mi_nats;
        cumulative.push(total_mi);
        let err = rec.posterior.mean() - truth;
        nees.push(rec.posterior.cov().cholesky()?.quad_inv(&err));
        belief = rec.posterior.clone();
        records.push(rec);
    }
    let mean_nees = nees.iter().sum::<f64>() / steps as f64;
    Ok(FilterRun {
        records,
        cumulative_mi_nats: cumulative,
        nees,
        summary: FilterSummary {
            steps,
            cumulative_mi_nats: total_mi,
            mean_nees,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_model(q: f64, r: f64) -> StateSpaceModel {
        StateSpaceModel {
            n: 1,
            m: 1,
            l: 1,
            phi: DMatrix::identity(1, 1),
            gamma: DMatrix::identity(1, 1),
            h: DMatrix::identity(1, 1),
            q: SymMatrix::from_diagonal(&[q]),
            r: SymMatrix::from_diagonal(&[r]),
        }
    }

    fn scenario(q: f64, r: f64, steps: usize, truth_var: f64) -> Scenario {
        Scenario::new(
            scalar_model(q, r),
            DVector::from_element(1, 1.0),
            SymMatrix::from_diagonal(&[truth_var]),
            GaussianBelief::new(DVector::from_element(1, 1.0), SymMatrix::identity(1)).unwrap(),
            steps,
            3,
        )
        .unwrap()
    }

    #[test]
    fn noiseless_fixed_point() {
        let s = scenario(0.0, 0.0, 20, 0.0);
        let t = generate(&s).unwrap();
        assert_eq!(t.truths().len(), 21);
        assert!(t.truths().iter().all(|x| x[0] == 1.0));
        assert!(t.measurements().iter().all(|z| z[0] == 1.0));

        // filter with a definite R over the noiseless data
        let mut f = s.clone();
        f.model.r = SymMatrix::identity(1);
        let run = run_filter(&f, &t).unwrap();
        assert!(run.nees.iter().all(|&v| v == 0.0));
        assert_eq!(run.summary.mean_nees, 0.0);
    }

    #[test]
    fn deterministic_per_seed() {
        let s = scenario(1.0, 1.0, 50, 1.0);
        assert_eq!(generate(&s).unwrap(), generate(&s).unwrap());
        assert_ne!(generate(&s).unwrap(), generate(&s.with_seed(4)).unwrap());
    }

    #[test]
    fn filter_requires_definite_r() {
        let s = scenario(1.0, 0.0, 5, 0.0);
        let t = generate(&s).unwrap();
        assert!(matches!(run_filter(&s, &t), Err(Error::InvalidModel(_))));
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let s = scenario(1.0, 1.0, 5, 0.0);
        let t = Trajectory::new(vec![DVector::zeros(2); 3], vec![DVector::zeros(1); 2]).unwrap();
        assert!(matches!(
            run_filter(&s, &t),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn trajectory_shape_checked() {
        assert!(Trajectory::new(vec![DVector::zeros(1); 2], vec![DVector::zeros(1); 2]).is_err());
        assert!(Trajectory::new(vec![DVector::zeros(1)], vec![]).is_err());
        assert!(Trajectory::new(
            vec![DVector::zeros(1), DVector::from_element(1, f64::NAN)],
            vec![DVector::zeros(1)]
        )
        .is_err());
    }

    #[test]
    fn scenario_checks() {
        let s = scenario(1.0, 1.0, 5, 0.0);
        let mut bad = s.clone();
        bad.steps = 0;
        assert!(generate(&bad).is_err());
        let mut bad = s.clone();
        bad.initial_truth_cov = SymMatrix::from_diagonal(&[-1.0]);
        assert!(generate(&bad).is_err());
    }
}
