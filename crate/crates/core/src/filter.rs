//! Measurement update.
//!
//! The posterior covariance is always the Joseph form
//! `(I − K H) Σ (I − K H)ᵀ + K R Kᵀ`, which holds for any gain `K`; the
//! optimal gain is just one input to it.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::information::update_mi;
use crate::linops::{is_spd, SymMatrix};
use crate::model::{check_belief_dim, check_model, shape_error, GaussianBelief, StateSpaceModel};

/// Gain matrix `K` (n×m) weighting the innovation.
#[derive(Debug, Clone, PartialEq)]
pub struct GainMatrix(DMatrix<f64>);

impl GainMatrix {
    pub fn new(k: DMatrix<f64>) -> Result<Self> {
        if k.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidScenario("gain has non-finite entries".into()));
        }
        Ok(GainMatrix(k))
    }

    pub fn zeros(n: usize, m: usize) -> Self {
        GainMatrix(DMatrix::zeros(n, m))
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    pub fn shape(&self) -> (usize, usize) {
        self.0.shape()
    }

    pub(crate) fn check_shape(&self, n: usize, m: usize) -> Result<()> {
        if self.shape() != (n, m) {
            return Err(shape_error("gain", (n, m), self.shape()));
        }
        Ok(())
    }
}

/// Everything about one measurement update at step `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct UpdateRecord {
    pub step: usize,
    pub prior: GaussianBelief,
    pub measurement: DVector<f64>,
    /// `z − H x̂_prior`
    pub innovation: DVector<f64>,
    pub gain: GainMatrix,
    pub posterior: GaussianBelief,
    /// `½ ln(det Σ_prior / det Σ_post)`
    pub mi_nats: f64,
}

/// `K = Σ Hᵀ S⁻¹` with `S = H Σ Hᵀ + R`, from a Cholesky solve of `S`.
pub fn kalman_gain(prior_cov: &SymMatrix, model: &StateSpaceModel) -> Result<GainMatrix> {
    check_model(model)?;
    if prior_cov.dim() != model.n {
        return Err(shape_error(
            "prior covariance",
            (model.n, model.n),
            (prior_cov.dim(), prior_cov.dim()),
        ));
    }
    gain_from_parts(prior_cov, &model.h, &model.r)
}

pub(crate) fn gain_from_parts(
    prior_cov: &SymMatrix,
    h: &DMatrix<f64>,
    r: &SymMatrix,
) -> Result<GainMatrix> {
    let s = SymMatrix::symmetrize(prior_cov.congruence(h).into_matrix() + r.as_matrix());
    let chol = s.cholesky().map_err(|_| Error::NotPositiveDefinite {
        what: "innovation covariance",
    })?;
    // S Kᵀ = H Σ
    let kt = chol.solve(&(h * prior_cov.as_matrix()));
    Ok(GainMatrix(kt.transpose()))
}

/// Joseph-form covariance `(I − K H) Σ (I − K H)ᵀ + K R Kᵀ`.
pub(crate) fn joseph_cov(
    prior_cov: &SymMatrix,
    k: &DMatrix<f64>,
    h: &DMatrix<f64>,
    r: &SymMatrix,
) -> SymMatrix {
    let n = prior_cov.dim();
    let a = DMatrix::<f64>::identity(n, n) - k * h;
    SymMatrix::symmetrize(prior_cov.congruence(&a).into_matrix() + r.congruence(k).into_matrix())
}

/// Linear correction with an arbitrary gain.
pub fn update_joseph(
    prior: &GaussianBelief,
    z: &DVector<f64>,
    gain: &GainMatrix,
    model: &StateSpaceModel,
) -> Result<UpdateRecord> {
    check_model(model)?;
    check_belief_dim(prior, model)?;
    gain.check_shape(model.n, model.m)?;
    if z.len() != model.m {
        return Err(shape_error("measurement", (model.m, 1), (z.len(), 1)));
    }
    let k = gain.as_matrix();
    let innovation = z - &model.h * prior.mean();
    let mean = prior.mean() + k * &innovation;
    let cov = joseph_cov(prior.cov(), k, &model.h, &model.r);
    if !is_spd(&cov) {
        return Err(Error::NotPositiveDefinite {
            what: "posterior covariance",
        });
    }
    let mi_nats = update_mi(prior.cov(), &cov)?;
    Ok(UpdateRecord {
        step: 0,
        prior: prior.clone(),
        measurement: z.clone(),
        innovation,
        gain: gain.clone(),
        posterior: GaussianBelief::from_parts(mean, cov),
        mi_nats,
    })
}

/// Update with the closed-form gain.
pub fn update_optimal(
    prior: &GaussianBelief,
    z: &DVector<f64>,
    model: &StateSpaceModel,
) -> Result<UpdateRecord> {
    check_belief_dim(prior, model)?;
    let gain = kalman_gain(prior.cov(), model)?;
    update_joseph(prior, z, &gain, model)
}

/// Short-form posterior `(I − K H) Σ`, valid only at the optimal gain.
pub fn short_form_cov(prior_cov: &SymMatrix, gain: &GainMatrix, h: &DMatrix<f64>) -> DMatrix<f64> {
    let n = prior_cov.dim();
    (DMatrix::<f64>::identity(n, n) - gain.as_matrix() * h) * prior_cov.as_matrix()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::LN_2;

    fn scalar_model(h: f64, r: f64) -> StateSpaceModel {
        StateSpaceModel::new(
            DMatrix::identity(1, 1),
            DMatrix::identity(1, 1),
            DMatrix::from_element(1, 1, h),
            SymMatrix::identity(1),
            SymMatrix::from_diagonal(&[r]),
        )
        .unwrap()
    }

    fn unit_prior(mean: f64) -> GaussianBelief {
        GaussianBelief::new(DVector::from_element(1, mean), SymMatrix::identity(1)).unwrap()
    }

    #[test]
    fn gain_examples() {
        let s = SymMatrix::identity(1);
        let k = kalman_gain(&s, &scalar_model(1.0, 1.0))
            .unwrap()
            .as_matrix()[(0, 0)];
        assert!((k - 0.5).abs() < 1e-15);
        assert_eq!(
            kalman_gain(&s, &scalar_model(0.0, 1.0))
                .unwrap()
                .as_matrix()[(0, 0)],
            0.0
        );
        let k = kalman_gain(&s, &scalar_model(1.0, 1e-12))
            .unwrap()
            .as_matrix()[(0, 0)];
        assert!((k - 1.0).abs() < 1e-9);
    }

    #[test]
    fn zero_h_gives_zero_gain_in_higher_dims() {
        let model = StateSpaceModel::new(
            DMatrix::identity(3, 3),
            DMatrix::identity(3, 3),
            DMatrix::zeros(2, 3),
            SymMatrix::identity(3),
            SymMatrix::identity(2),
        )
        .unwrap();
        let k = kalman_gain(&SymMatrix::from_diagonal(&[1.0, 2.0, 3.0]), &model).unwrap();
        assert_eq!(k.as_matrix(), &DMatrix::<f64>::zeros(3, 2));
    }

    #[test]
    fn zero_gain_leaves_prior() {
        let model = scalar_model(1.0, 1.0);
        let prior = unit_prior(0.3);
        let rec = update_joseph(
            &prior,
            &DVector::from_element(1, 9.0),
            &GainMatrix::zeros(1, 1),
            &model,
        )
        .unwrap();
        assert_eq!(rec.posterior, prior);
        assert_eq!(rec.mi_nats, 0.0);
    }

    #[test]
    fn joseph_arithmetic() {
        let model = scalar_model(1.0, 1.0);
        let prior = unit_prior(1.0);
        let z = DVector::from_element(1, 3.0);
        let half = GainMatrix::new(DMatrix::from_element(1, 1, 0.5)).unwrap();
        let rec = update_joseph(&prior, &z, &half, &model).unwrap();
        assert_eq!(rec.innovation[0], 2.0);
        assert_eq!(rec.posterior.mean()[0], 2.0);
        assert_eq!(rec.posterior.cov()[(0, 0)], 0.5);

        let fifth = GainMatrix::new(DMatrix::from_element(1, 1, 0.2)).unwrap();
        let rec = update_joseph(&prior, &z, &fifth, &model).unwrap();
        assert!((rec.posterior.cov()[(0, 0)] - 0.68).abs() < 1e-15);
    }

    #[test]
    fn optimal_scalar_zero_innovation() {
        let model = scalar_model(1.0, 1.0);
        let prior = unit_prior(0.7);
        let rec = update_optimal(&prior, &DVector::from_element(1, 0.7), &model).unwrap();
        assert_eq!(rec.posterior.mean()[0], 0.7);
        assert!((rec.posterior.cov()[(0, 0)] - 0.5).abs() < 1e-15);
        assert!((rec.mi_nats - 0.5 * LN_2).abs() < 1e-15);
    }

    #[test]
    fn optimal_decoupled_coordinates() {
        let model = StateSpaceModel::new(
            DMatrix::identity(2, 2),
            DMatrix::identity(2, 2),
            DMatrix::from_row_slice(1, 2, &[1.0, 0.0]),
            SymMatrix::identity(2),
            SymMatrix::identity(1),
        )
        .unwrap();
        let prior = GaussianBelief::new(DVector::zeros(2), SymMatrix::identity(2)).unwrap();
        let rec = update_optimal(&prior, &DVector::from_element(1, 1.0), &model).unwrap();
        let k = DMatrix::from_column_slice(2, 1, &[0.5, 0.0]);
        assert!((rec.gain.as_matrix() - k).amax() < 1e-15);
        let post = SymMatrix::from_diagonal(&[0.5, 1.0]);
        assert!((rec.posterior.cov().as_matrix() - post.as_matrix()).amax() < 1e-15);
    }

    #[test]
    fn shape_errors() {
        let model = scalar_model(1.0, 1.0);
        let prior = unit_prior(0.0);
        assert!(matches!(
            update_joseph(&prior, &DVector::zeros(2), &GainMatrix::zeros(1, 1), &model),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            update_joseph(&prior, &DVector::zeros(1), &GainMatrix::zeros(2, 1), &model),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(GainMatrix::new(DMatrix::from_element(1, 1, f64::INFINITY)).is_err());
    }
}
