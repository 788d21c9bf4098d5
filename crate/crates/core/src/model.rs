//! Discrete-time linear-Gaussian state-space model and the time update.
//!
//! ```text
//! x_k = Φ x_{k-1} + Γ w_{k-1},   w ~ N(0, Q)
//! z_k = H x_k + v_k,             v ~ N(0, R)
//! ```

use std::fmt;

use nalgebra::{DMatrix, DVector};

use crate::error::{dims, Error, Result};
use crate::linops::{is_psd, is_spd, SymMatrix};

/// One problem found by [`StateSpaceModel::validate`].
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub field: &'static str,
    pub message: String,
}

impl Violation {
    fn new(field: &'static str, message: impl Into<String>) -> Self {
        Violation {
            field,
            message: message.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.field, self.message)
    }
}

/// Time-invariant system matrices with declared dimensions.
///
/// Fields are public so that a malformed model can be built and reported on;
/// the estimation routines call [`validate`](Self::validate) themselves.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpaceModel {
    /// state dimension
    pub n: usize,
    /// measurement dimension
    pub m: usize,
    /// process-noise dimension
    pub l: usize,
    pub phi: DMatrix<f64>,
    pub gamma: DMatrix<f64>,
    pub h: DMatrix<f64>,
    pub q: SymMatrix,
    pub r: SymMatrix,
}

impl StateSpaceModel {
    /// Builds a model with dimensions taken from `phi`, `h` and `q`, and
    /// validates it.
    pub fn new(
        phi: DMatrix<f64>,
        gamma: DMatrix<f64>,
        h: DMatrix<f64>,
        q: SymMatrix,
        r: SymMatrix,
    ) -> Result<Self> {
        let model = StateSpaceModel {
            n: phi.nrows(),
            m: h.nrows(),
            l: q.dim(),
            phi,
            gamma,
            h,
            q,
            r,
        };
        model.validate().map_err(Error::InvalidModel)?;
        Ok(model)
    }

    /// Returns every violation found, naming the offending field.
    pub fn validate(&self) -> std::result::Result<(), Vec<Violation>> {
        let mut out = self.structural_violations();
        if out.is_empty() && !is_spd(&self.r) {
            out.push(Violation::new("R", "not positive definite"));
        }
        if out.is_empty() {
            Ok(())
        } else {
            Err(out)
        }
    }

    /// Like [`validate`](Self::validate) but accepts a positive
    /// semidefinite `R`. Only the trajectory generator uses this; nothing
    /// here inverts `R`.
    pub fn validate_for_generation(&self) -> std::result::Result<(), Vec<Violation>> {
        let mut out = self.structural_violations();
        if out.is_empty() && !is_psd(&self.r) {
            out.push(Violation::new("R", "not positive semidefinite"));
        }
        if out.is_empty() {
            Ok(())
        } else {
            Err(out)
        }
    }

    fn structural_violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let (n, m, l) = (self.n, self.m, self.l);
        for (name, value) in [("n", n), ("m", m), ("l", l)] {
            if value == 0 {
                out.push(Violation::new(name, "must be at least 1"));
            }
        }
        let mut shape = |field: &'static str, mat: (usize, usize), want: (usize, usize)| {
            if mat.0 != want.0 {
                out.push(Violation::new(
                    field,
                    format!("row count {} != {}", mat.0, want.0),
                ));
            }
            if mat.1 != want.1 {
                out.push(Violation::new(
                    field,
                    format!("column count {} != {}", mat.1, want.1),
                ));
            }
        };
        shape("Phi", self.phi.shape(), (n, n));
        shape("Gamma", self.gamma.shape(), (n, l));
        shape("H", self.h.shape(), (m, n));
        shape("Q", (self.q.dim(), self.q.dim()), (l, l));
        shape("R", (self.r.dim(), self.r.dim()), (m, m));
        let finite = |x: &DMatrix<f64>| x.iter().all(|v| v.is_finite());
        for (field, mat) in [
            ("Phi", &self.phi),
            ("Gamma", &self.gamma),
            ("H", &self.h),
            ("Q", self.q.as_matrix()),
            ("R", self.r.as_matrix()),
        ] {
            if !finite(mat) {
                out.push(Violation::new(field, "has non-finite entries"));
            }
        }
        if out.is_empty() && !is_psd(&self.q) {
            out.push(Violation::new("Q", "not positive semidefinite"));
        }
        out
    }

    /// `Γ Q Γᵀ`
    pub fn process_noise(&self) -> SymMatrix {
        self.q.congruence(&self.gamma)
    }

    /// Innovation covariance `H Σ Hᵀ + R`.
    pub fn innovation_cov(&self, prior_cov: &SymMatrix) -> SymMatrix {
        SymMatrix::symmetrize(prior_cov.congruence(&self.h).into_matrix() + self.r.as_matrix())
    }
}

/// Mean and SPD covariance of a Gaussian state estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianBelief {
    mean: DVector<f64>,
    cov: SymMatrix,
}

impl GaussianBelief {
    pub fn new(mean: DVector<f64>, cov: SymMatrix) -> Result<Self> {
        if mean.len() != cov.dim() {
            return Err(Error::DimensionMismatch {
                what: "belief mean vs covariance",
                expected: format!("{}", cov.dim()),
                actual: format!("{}", mean.len()),
            });
        }
        if mean.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidScenario(
                "belief mean has non-finite entries".into(),
            ));
        }
        if !is_spd(&cov) {
            return Err(Error::NotPositiveDefinite {
                what: "belief covariance",
            });
        }
        Ok(GaussianBelief { mean, cov })
    }

    /// Caller guarantees the invariants already hold.
    pub(crate) fn from_parts(mean: DVector<f64>, cov: SymMatrix) -> Self {
        GaussianBelief { mean, cov }
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &SymMatrix {
        &self.cov
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

pub(crate) fn check_model(model: &StateSpaceModel) -> Result<()> {
    model.validate().map_err(Error::InvalidModel)
}

pub(crate) fn check_belief_dim(belief: &GaussianBelief, model: &StateSpaceModel) -> Result<()> {
    if belief.dim() != model.n {
        return Err(Error::DimensionMismatch {
            what: "belief vs model state dimension",
            expected: model.n.to_string(),
            actual: belief.dim().to_string(),
        });
    }
    Ok(())
}

/// Time update: `x̂ ← Φ x̂`, `Σ ← Φ Σ Φᵀ + Γ Q Γᵀ`.
pub fn predict(prior: &GaussianBelief, model: &StateSpaceModel) -> Result<GaussianBelief> {
    check_model(model)?;
    check_belief_dim(prior, model)?;
    let mean = &model.phi * prior.mean();
    let cov = SymMatrix::symmetrize(
        prior.cov().congruence(&model.phi).into_matrix() + model.process_noise().as_matrix(),
    );
    if !is_spd(&cov) {
        return Err(Error::NotPositiveDefinite {
            what: "predicted covariance",
        });
    }
    Ok(GaussianBelief { mean, cov })
}

pub(crate) fn shape_error(what: &'static str, want: (usize, usize), got: (usize, usize)) -> Error {
    Error::DimensionMismatch {
        what,
        expected: dims(want.0, want.1),
        actual: dims(got.0, got.1),
    }
}
