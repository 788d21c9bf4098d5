//! The gain as the maximizer of update mutual information.
//!
//! For a fixed prior `Σ`, measurement matrix `H` and noise `R`, any gain `K`
//! yields the Joseph posterior `Σ_k(K)` and the information
//!
//! ```text
//! I(K) = ½ (ln det Σ − ln det Σ_k(K))
//! ∇I(K) = −Σ_k(K)⁻¹ (K S − Σ Hᵀ),       S = H Σ Hᵀ + R
//! ```
//!
//! The gradient vanishes exactly at `K* = Σ Hᵀ S⁻¹`, and along any direction
//! `Δ` the curvature there is `−tr(Σ_k⁻¹ Δ S Δᵀ) < 0`. This module climbs
//! `I(K)` numerically and checks both facts.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::filter::{gain_from_parts, joseph_cov, GainMatrix};
use crate::linops::{log_det_spd, Cholesky, SymMatrix};
use crate::model::{check_model, shape_error, StateSpaceModel};
use crate::rng::{streams, GaussianStream};

/// Step used for the directional second differences.
pub const CURVATURE_STEP: f64 = 1e-4;

/// Stationarity required by [`concavity_check`], relative to `max(1, ‖Σ Hᵀ‖_F)`.
pub const STATIONARITY_TOLERANCE: f64 = 1e-8;

/// `I(K)` for fixed `Σ`, `H`, `R`, with `S = H Σ Hᵀ + R` cached.
#[derive(Debug, Clone)]
pub struct MiObjective {
    prior_cov: SymMatrix,
    h: DMatrix<f64>,
    r: SymMatrix,
    s: SymMatrix,
    prior_log_det: f64,
    /// `Σ Hᵀ`
    cross: DMatrix<f64>,
}

impl MiObjective {
    pub fn new(prior_cov: SymMatrix, h: DMatrix<f64>, r: SymMatrix) -> Result<Self> {
        let n = prior_cov.dim();
        let m = r.dim();
        if h.shape() != (m, n) {
            return Err(shape_error("H", (m, n), h.shape()));
        }
        let prior_log_det = log_det_spd(&prior_cov).map_err(|_| Error::NotPositiveDefinite {
            what: "prior covariance",
        })?;
        log_det_spd(&r).map_err(|_| Error::NotPositiveDefinite { what: "R" })?;
        let s = SymMatrix::symmetrize(prior_cov.congruence(&h).into_matrix() + r.as_matrix());
        s.cholesky().map_err(|_| Error::NotPositiveDefinite {
            what: "innovation covariance",
        })?;
        let cross = prior_cov.as_matrix() * h.transpose();
        Ok(MiObjective {
            prior_cov,
            h,
            r,
            s,
            prior_log_det,
            cross,
        })
    }

    pub fn from_model(prior_cov: &SymMatrix, model: &StateSpaceModel) -> Result<Self> {
        check_model(model)?;
        Self::new(prior_cov.clone(), model.h.clone(), model.r.clone())
    }

    pub fn n(&self) -> usize {
        self.prior_cov.dim()
    }

    pub fn m(&self) -> usize {
        self.r.dim()
    }

    pub fn prior_cov(&self) -> &SymMatrix {
        &self.prior_cov
    }

    pub fn h(&self) -> &DMatrix<f64> {
        &self.h
    }

    pub fn r(&self) -> &SymMatrix {
        &self.r
    }

    /// Innovation covariance `H Σ Hᵀ + R`.
    pub fn s(&self) -> &SymMatrix {
        &self.s
    }

    /// Closed-form maximizer `Σ Hᵀ S⁻¹`.
    pub fn closed_form_gain(&self) -> GainMatrix {
        gain_from_parts(&self.prior_cov, &self.h, &self.r).expect("S was factored at construction")
    }

    /// Joseph posterior `Σ_k(K)`.
    pub fn posterior_cov(&self, k: &GainMatrix) -> Result<SymMatrix> {
        k.check_shape(self.n(), self.m())?;
        Ok(joseph_cov(&self.prior_cov, k.as_matrix(), &self.h, &self.r))
    }

    fn posterior_chol(&self, k: &GainMatrix) -> Result<Cholesky> {
        self.posterior_cov(k)?
            .cholesky()
            .map_err(|_| Error::NotPositiveDefinite {
                what: "posterior covariance",
            })
    }

    /// `K S − Σ Hᵀ`; zero exactly at the optimum.
    fn residual(&self, k: &DMatrix<f64>) -> DMatrix<f64> {
        k * self.s.as_matrix() - &self.cross
    }
}

/// Information gained if gain `k` were used.
pub fn mi_of_gain(obj: &MiObjective, k: &GainMatrix) -> Result<f64> {
    let post = obj.posterior_chol(k)?;
    Ok(0.5 * (obj.prior_log_det - post.log_det()))
}

/// `∇_K I = −Σ_k(K)⁻¹ (K S − Σ Hᵀ)`.
pub fn mi_gradient(obj: &MiObjective, k: &GainMatrix) -> Result<DMatrix<f64>> {
    let post = obj.posterior_chol(k)?;
    Ok(-post.solve(&obj.residual(k.as_matrix())))
}

/// `I(K + D) − I(K)` without cancellation:
/// `−½ ln det(I + L⁻¹ (A Dᵀ + D Aᵀ + D S Dᵀ) L⁻ᵀ)` with `A = K S − Σ Hᵀ`
/// and `L Lᵀ = Σ_k(K)`.
fn mi_increment(obj: &MiObjective, post: &Cholesky, k: &DMatrix<f64>, d: &DMatrix<f64>) -> f64 {
    let a = obj.residual(k);
    let ad = &a * d.transpose();
    let delta = &ad + ad.transpose() + d * obj.s.as_matrix() * d.transpose();
    let left = post.solve_lower(&delta);
    let whitened = post.solve_lower(&left.transpose());
    let e = (&whitened + whitened.transpose()) * 0.5;
    let eig = SymmetricEigen::new(e);
    -0.5 * eig.eigenvalues.iter().map(|&l| l.ln_1p()).sum::<f64>()
}

/// How the first trial step of each line search is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepRule {
    /// Always start from `initial_step`.
    Fixed,
    /// Start from the Barzilai–Borwein step `⟨s, s⟩ / ⟨s, −y⟩` of the last
    /// move (`s` = gain change, `y` = gradient change); `initial_step` on
    /// the first iteration or when the curvature estimate is not negative.
    BarzilaiBorwein,
}

/// Gradient-ascent settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerSettings {
    pub max_iterations: usize,
    /// on `‖∇I‖_F`
    pub gradient_tolerance: f64,
    pub initial_step: f64,
    pub backtrack_factor: f64,
    pub armijo_constant: f64,
    pub step_rule: StepRule,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        OptimizerSettings {
            max_iterations: 10_000,
            gradient_tolerance: 1e-10,
            initial_step: 1.0,
            backtrack_factor: 0.5,
            armijo_constant: 1e-4,
            step_rule: StepRule::BarzilaiBorwein,
        }
    }
}

impl OptimizerSettings {
    fn check(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(Error::InvalidSettings("max_iterations must be positive"));
        }
        if !(self.gradient_tolerance > 0.0) {
            return Err(Error::InvalidSettings(
                "gradient_tolerance must be positive",
            ));
        }
        if !(self.initial_step > 0.0) {
            return Err(Error::InvalidSettings("initial_step must be positive"));
        }
        if !(self.backtrack_factor > 0.0 && self.backtrack_factor < 1.0) {
            return Err(Error::InvalidSettings("backtrack_factor must be in (0, 1)"));
        }
        if !(self.armijo_constant > 0.0 && self.armijo_constant < 1.0) {
            return Err(Error::InvalidSettings("armijo_constant must be in (0, 1)"));
        }
        Ok(())
    }
}

/// Record of one gain ascent.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationTrace {
    /// Accepted steps.
    pub iterations: usize,
    pub final_gain: GainMatrix,
    pub final_mi_nats: f64,
    pub final_gradient_norm: f64,
    pub converged: bool,
    /// `(mi_nats, gradient_norm)` at the start point and after every step.
    pub per_iteration: Vec<(f64, f64)>,
}

/// Gradient ascent on `I(K)` with Armijo backtracking.
///
/// MI along the trace is accumulated from exact increments so that tiny
/// late steps stay visible; it agrees with `mi_of_gain` at round-off level.
pub fn maximize_mi(
    obj: &MiObjective,
    init: &GainMatrix,
    settings: &OptimizerSettings,
) -> Result<OptimizationTrace> {
    settings.check()?;
    init.check_shape(obj.n(), obj.m())?;

    let mut k = init.as_matrix().clone();
    let mut mi = mi_of_gain(obj, init)?;
    let mut post = obj.posterior_chol(init)?;
    let mut grad = -post.solve(&obj.residual(&k));
    let mut grad_norm = grad.norm();
    let mut per_iteration = vec![(mi, grad_norm)];
    let mut iterations = 0;
    let mut trial_step = settings.initial_step;

    let trace =
        |k: DMatrix<f64>, mi, grad_norm, iterations, converged, per_iteration| OptimizationTrace {
            iterations,
            final_gain: GainMatrix::new(k).expect("iterates stay finite"),
            final_mi_nats: mi,
            final_gradient_norm: grad_norm,
            converged,
            per_iteration,
        };

    while grad_norm > settings.gradient_tolerance {
        if iterations == settings.max_iterations {
            return Err(Error::DidNotConverge(Box::new(trace(
                k,
                mi,
                grad_norm,
                iterations,
                false,
                per_iteration,
            ))));
        }
        let slope = grad_norm * grad_norm;
        let mut step = trial_step;
        let accepted = loop {
            let d = &grad * step;
            let gain = mi_increment(obj, &post, &k, &d);
            if gain >= settings.armijo_constant * step * slope {
                break Some((d, gain));
            }
            step *= settings.backtrack_factor;
            if step * grad_norm < 1e-300 || step < f64::EPSILON * 1e-10 {
                break None;
            }
        };
        let Some((d, gain)) = accepted else {
            // no representable ascent step remains
            return Err(Error::DidNotConverge(Box::new(trace(
                k,
                mi,
                grad_norm,
                iterations,
                false,
                per_iteration,
            ))));
        };
        k += &d;
        mi += gain;
        let kg = GainMatrix::new(k.clone())?;
        post = obj.posterior_chol(&kg)?;
        let next = -post.solve(&obj.residual(&k));
        if settings.step_rule == StepRule::BarzilaiBorwein {
            let curvature = d.dot(&(&grad - &next));
            trial_step = if curvature > 0.0 {
                (d.norm_squared() / curvature).clamp(1e-12, 1e12)
            } else {
                settings.initial_step
            };
        }
        grad = next;
        grad_norm = grad.norm();
        iterations += 1;
        per_iteration.push((mi, grad_norm));
    }
    Ok(trace(k, mi, grad_norm, iterations, true, per_iteration))
}

/// Directional curvature of `I(K)` at a stationary gain.
#[derive(Debug, Clone, PartialEq)]
pub struct ConcavityReport {
    /// Central second differences `(I(K+tΔ) − 2I(K) + I(K−tΔ)) / t²`.
    pub second_differences: Vec<f64>,
    /// `−tr(Σ_k⁻¹ Δ S Δᵀ)` for the same directions.
    pub analytic: Vec<f64>,
    pub all_negative: bool,
    /// `max |second difference − analytic|`
    pub max_abs_error: f64,
    /// `max |second difference − analytic| / |analytic|`
    pub max_rel_error: f64,
}

/// Probes `directions` seeded random unit-Frobenius directions at `at`.
pub fn concavity_check(
    obj: &MiObjective,
    at: &GainMatrix,
    directions: usize,
    seed: u64,
) -> Result<ConcavityReport> {
    let grad_norm = mi_gradient(obj, at)?.norm();
    let tolerance = STATIONARITY_TOLERANCE * obj.cross.norm().max(1.0);
    if grad_norm > tolerance {
        return Err(Error::NotStationary {
            gradient_norm: grad_norm,
            tolerance,
        });
    }
    let (n, m) = (obj.n(), obj.m());
    let mut normals = GaussianStream::new(seed, streams::DIRECTIONS);
    let dirs: Vec<DMatrix<f64>> = (0..directions)
        .map(|_| loop {
            let d = DMatrix::from_vec(n, m, normals.normals(n * m));
            let norm = d.norm();
            if norm > 0.0 {
                break d / norm;
            }
        })
        .collect();
    curvature_along(obj, at, &dirs)
}

/// As [`concavity_check`] with caller-chosen directions; zero directions are
/// skipped and the rest normalized.
pub fn curvature_along(
    obj: &MiObjective,
    at: &GainMatrix,
    directions: &[DMatrix<f64>],
) -> Result<ConcavityReport> {
    let post_inv = obj.posterior_chol(at)?;
    let centre = mi_of_gain(obj, at)?;
    let t = CURVATURE_STEP;
    let mut report = ConcavityReport {
        second_differences: Vec::new(),
        analytic: Vec::new(),
        all_negative: true,
        max_abs_error: 0.0,
        max_rel_error: 0.0,
    };
    for raw in directions {
        raw.shape()
            .eq(&(obj.n(), obj.m()))
            .then_some(())
            .ok_or_else(|| shape_error("direction", (obj.n(), obj.m()), raw.shape()))?;
        let norm = raw.norm();
        if norm == 0.0 {
            continue;
        }
        let d = raw / norm;
        let plus = GainMatrix::new(at.as_matrix() + &d * t)?;
        let minus = GainMatrix::new(at.as_matrix() - &d * t)?;
        let fd = (mi_of_gain(obj, &plus)? - 2.0 * centre + mi_of_gain(obj, &minus)?) / (t * t);
        let dsd = &d * obj.s.as_matrix() * d.transpose();
        let exact = -post_inv.solve(&dsd).trace();
        report.all_negative &= fd < 0.0;
        let err = (fd - exact).abs();
        report.max_abs_error = report.max_abs_error.max(err);
        report.max_rel_error = report.max_rel_error.max(err / exact.abs());
        report.second_differences.push(fd);
        report.analytic.push(exact);
    }
    Ok(report)
}
